"""Command-line entry point gluing the toolkit modules together.

One ``iwek`` command with subcommands for simulating workloads, ranking
knobs, training and querying estimators, transferring experiences,
managing the experience repository, running the evaluation harness, and
serving the HTTP API.  Every file read or written uses the canonical
JSON serialization, so artifacts are reproducible byte for byte.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3
internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from iwek import __version__, serialize
from iwek.core import DataError, Fingerprint, KnobConfig, KPDataset, QueryLog

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_SEED_HELP = "seed reused by every random draw this subcommand makes"


class _UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""

    def __init__(self, message: str, parser: argparse.ArgumentParser | None = None):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on errors by default; raise instead so
    # main() can translate to the documented exit codes.
    def error(self, message):
        raise _UsageError(message, self)


def _read(path: str, cls: type):
    """Load one canonical document and require its type."""
    obj = serialize.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, cls):
        raise DataError(
            f"{path} holds a {type(obj).__name__}, expected {cls.__name__}"
        )
    return obj


def _emit(args, obj) -> int:
    """Write a document to --out when given, else print it to stdout."""
    text = serialize.dumps(obj)
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
        if args.json:
            print(serialize.canonical_json({"wrote": args.out}))
        else:
            print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _repo_root(args) -> str:
    root = getattr(args, "repo", None) or os.environ.get("IWEK_REPO")
    if not root:
        raise _UsageError("no repository: pass --repo or set IWEK_REPO")
    return root


def _build_config(args, specs=None) -> KnobConfig:
    """Configuration from --config plus any --set overrides."""
    values: dict[str, float] = {}
    if getattr(args, "config", None):
        values.update(_read(args.config, KnobConfig).as_dict())
    for item in getattr(args, "set", None) or ():
        name, sep, raw = item.partition("=")
        if not sep or not name:
            raise _UsageError(f"--set expects name=value, got {item!r}")
        try:
            values[name] = float(raw)
        except ValueError:
            raise _UsageError(f"--set value for {name!r} is not a number: {raw!r}")
    return KnobConfig.from_mapping(values)


# ---------------------------------------------------------------------------
# Subcommand handlers.


def _cmd_sim(args) -> int:
    from iwek.sim import collect_kp, gen_log, make_scenario_suite
    from iwek.transfer import lhs_sample

    suite = make_scenario_suite(seed=args.seed)
    if args.scenario is None:
        if args.points is not None or args.log is not None or args.out:
            raise _UsageError("--points, --log and --out require --scenario")
        rows = [
            {
                "id": s.id,
                "env": s.scenario.env_tag,
                "data_scale": s.scenario.data_scale,
                "noise_sigma": s.noise_sigma,
                "important": list(s.important_knobs()),
            }
            for s in suite
        ]
        if args.json:
            print(serialize.canonical_json(rows))
        else:
            for r in rows:
                print(
                    f"{r['id']:10s} {r['env']:10s} scale {r['data_scale']:>4}"
                    f"  noise {r['noise_sigma']:.4f}  important: "
                    + ", ".join(r["important"])
                )
        return EXIT_OK

    s = suite.get(args.scenario)
    if args.points is not None and args.log is not None:
        raise _UsageError("choose one of --points or --log")
    if args.points is not None:
        design = lhs_sample(args.points, s.knobs, seed=args.seed)
        return _emit(args, collect_kp(s, design.configs, noisy=not args.noiseless))
    if args.log is not None:
        return _emit(args, gen_log(s, args.log, seed=args.seed))
    return _emit(args, s)


def _cmd_rank(args) -> int:
    from iwek.ranking import default_ensemble, rank_knobs

    D = _read(args.data, KPDataset)
    ranking = rank_knobs(default_ensemble(args.seed), D, seed=args.seed)
    if args.out:
        Path(args.out).write_text(serialize.dumps(ranking), encoding="utf-8")
    shown = ranking.weights if args.top is None else ranking.weights[: args.top]
    if args.json:
        print(
            serialize.canonical_json(
                [{"knob": k, "weight": w} for k, w in shown]
            )
        )
    else:
        for place, (knob, weight) in enumerate(shown, start=1):
            print(f"{place:2d}. {knob:30s} {weight:.6f}")
    return EXIT_OK


def _cmd_train(args) -> int:
    from iwek.estimator import fit_ike

    D = _read(args.data, KPDataset)
    model = fit_ike(D, budget=args.budget, seed=args.seed)
    Path(args.out).write_text(serialize.dumps(model), encoding="utf-8")
    summary = {
        "model": args.out,
        "rules": len(model.rules),
        "active_rules": sum(1 for w in model.weights if w != 0.0),
        "lam": model.lam,
        "intercept": model.intercept,
    }
    if args.json:
        print(serialize.canonical_json(summary))
    else:
        print(
            f"wrote {args.out}: {summary['rules']} rules,"
            f" {summary['active_rules']} active, lambda {model.lam:.6g}"
        )
    return EXIT_OK


def _cmd_predict(args) -> int:
    from iwek.estimator import InterpretableEstimator

    model = _read(args.model, InterpretableEstimator)
    x = _build_config(args)
    value = model.predict(x)
    if args.json:
        print(serialize.canonical_json({"prediction": value}))
    else:
        print(repr(value))
    return EXIT_OK


def _cmd_explain(args) -> int:
    from iwek.estimator import InterpretableEstimator, explain_payload

    model = _read(args.model, InterpretableEstimator)
    x = _build_config(args)
    payload = explain_payload(model, x)
    if args.json:
        print(serialize.canonical_json(payload))
    else:
        print(f"prediction {model.predict(x)!r}")
        for entry in payload:
            print(f"{entry['weight']:+.6f}  {entry['rule']}")
    return EXIT_OK


def _cmd_transfer(args) -> int:
    from iwek.repo import load_all, open_repository, put_model
    from iwek.transfer import (
        blend_experiences,
        fingerprint_from_log,
        match_experiences,
        transfer_estimator,
    )

    repo = open_repository(_repo_root(args))
    experiences = load_all(repo)

    if (args.log is None) == (args.fingerprint is None):
        raise _UsageError("pass exactly one of --log or --fingerprint")
    if args.log is not None:
        f = fingerprint_from_log(_read(args.log, QueryLog))
    else:
        f = _read(args.fingerprint, Fingerprint)

    if (args.labels is None) == (args.sim_scenario is None):
        raise _UsageError("pass exactly one of --labels or --sim-scenario")
    if args.sim_scenario is not None:
        from iwek.sim import make_scenario_suite, oracle_perf

        s = make_scenario_suite(seed=args.sim_seed).get(args.sim_scenario)
        model = transfer_estimator(
            experiences,
            f,
            lambda configs: [oracle_perf(s, x, noisy=True) for x in configs],
            target_specs=s.knobs,
            K=args.K,
            N=args.N,
            seed=args.seed,
        )
    else:
        # Measured labels already exist, so their configurations are the
        # probe design; no fresh sampling round is needed.
        D = _read(args.labels, KPDataset)
        if not D.knobs:
            raise DataError(f"{args.labels} must embed its knob universe")
        match = match_experiences(experiences, f, K=args.K)
        model = blend_experiences(match, D, D.knobs)

    model_id = put_model(repo, model)
    if args.out:
        Path(args.out).write_text(serialize.dumps(model), encoding="utf-8")
    summary = {
        "model_id": model_id,
        "members": [m.scenario_id for m in model.members],
        "weights": list(model.weights),
    }
    if args.json:
        print(serialize.canonical_json(summary))
    else:
        parts = ", ".join(
            f"{sid}={w:.3f}" for sid, w in zip(summary["members"], model.weights)
        )
        print(f"stored {model_id}  ({parts})")
    return EXIT_OK


def _cmd_repo(args) -> int:
    from iwek import repo as store
    from iwek.core import Experience

    repo = store.open_repository(_repo_root(args))
    if args.action == "init":
        if args.json:
            print(serialize.canonical_json({"repo": str(repo.root)}))
        else:
            print(f"initialized {repo.root}")
        return EXIT_OK
    if args.action == "list":
        rows = [
            {"id": entry_id, "suid": list(f.suid), "ops": list(f.ops)}
            for entry_id, f in store.scan_fingerprints(repo)
        ]
        if args.json:
            print(serialize.canonical_json(rows))
        else:
            for r in rows:
                suid = ", ".join(f"{v:.2f}" for v in r["suid"])
                print(f"{r['id']:12s} suid [{suid}]")
        return EXIT_OK
    if args.action == "add":
        experience = _read(args.file, Experience)
        entry_id = store.put(repo, experience, overwrite=args.overwrite)
        if args.json:
            print(serialize.canonical_json({"id": entry_id}))
        else:
            print(f"added {entry_id}")
        return EXIT_OK
    if args.action == "show":
        experience = store.get(repo, args.id)
        if args.json:
            print(serialize.dumps(experience))
        else:
            top = ", ".join(experience.ranking.names[:3])
            print(
                f"{experience.scenario_id}: {len(experience.estimator.rules)}"
                f" rules, top knobs {top}"
            )
        return EXIT_OK
    if args.action == "models":
        rows = list(store.model_ids(repo))
        if args.json:
            print(serialize.canonical_json(rows))
        else:
            for model_id in rows:
                print(model_id)
        return EXIT_OK
    raise _UsageError(f"unknown repo action {args.action!r}")


def _cmd_eval(args) -> int:
    from iwek import evaluation as ev
    from iwek.sim import make_scenario_suite

    suite = make_scenario_suite(seed=args.seed)
    which = args.which
    if args.report and which == "all":
        raise _UsageError("--report writes one CSV; pick a single report")
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict = {}

    def _csv_sink(name: str):
        if args.report:
            return Path(args.report)
        if out_dir:
            return out_dir / f"{name}.csv"
        return None

    context = None
    if which in ("origin", "transfer", "robustness", "all"):
        context = ev.build_suite_context(suite, budget=args.budget, seed=args.seed)

    if which in ("origin", "all"):
        report = ev.run_origin_eval(suite, seed=args.seed, context=context)
        summary["origin"] = {
            "avg_pearson": report.avg_pearson,
            "avg_pair_accuracy": report.avg_pair_accuracy,
            "baseline_avg_pearson": report.baseline_avg_pearson,
        }
        sink = _csv_sink("origin")
        if sink:
            sink.write_text(ev.origin_csv(report), encoding="utf-8")
    if which in ("transfer", "all"):
        report = ev.run_transfer_eval(suite, seed=args.seed, context=context)
        summary["transfer"] = {
            "avg_pearson": report.avg_pearson,
            "avg_pair_accuracy": report.avg_pair_accuracy,
        }
        sink = _csv_sink("transfer")
        if sink:
            sink.write_text(ev.transfer_csv(report), encoding="utf-8")
    if which in ("robustness", "all"):
        report = ev.run_robustness_sweep(suite, seed=args.seed, context=context)
        summary["robustness"] = {
            "accuracy_spread": report.accuracy_spread,
            "pearson_at_3": report.pearson_at(3),
            "best_pearson": report.best_pearson,
        }
        sink = _csv_sink("robustness")
        if sink:
            sink.write_text(ev.robustness_csv(report), encoding="utf-8")
    if which in ("recall", "all"):
        report = ev.ranking_recall(suite, seed=args.seed)
        summary["recall"] = {"avg_recall": report.avg_recall}
        sink = _csv_sink("recall")
        if sink:
            sink.write_text(ev.recall_csv(report), encoding="utf-8")

    if args.json:
        print(serialize.canonical_json(summary))
    else:
        for section, values in summary.items():
            parts = "  ".join(f"{k} {v:.4f}" for k, v in values.items())
            print(f"{section}: {parts}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from iwek.service import create_app

    app = create_app(_repo_root(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring.


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="iwek",
        description="What-if estimation of database knob configurations.",
    )
    parser.add_argument(
        "--version", action="version", version=f"iwek {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("sim", help="list scenarios or sample synthetic data")
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.add_argument("--scenario", help="scenario id, e.g. tpcc-1")
    p.add_argument("--points", type=int, help="write an LHS-labeled dataset this large")
    p.add_argument("--log", type=int, metavar="QUERIES", help="write a sampled query log")
    p.add_argument("--noiseless", action="store_true", help="label without oracle noise")
    p.add_argument("--out", help="output file (defaults to stdout)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("rank", help="rank knobs by ensemble importance")
    p.add_argument("--dataset", "--data", dest="data", required=True, help="kp_dataset file")
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.add_argument("--top-k", "--top", dest="top", type=int, help="show only the top K knobs")
    p.add_argument("--out", help="also write the ranking document here")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("train", help="fit the rule-based estimator")
    p.add_argument("--dataset", "--data", dest="data", required=True, help="kp_dataset file")
    p.add_argument("--out", required=True, help="model output file")
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.add_argument("--budget", type=int, default=30, help="forest search budget")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_train)

    for name, handler, description in (
        ("predict", _cmd_predict, "predict one configuration's performance"),
        ("explain", _cmd_explain, "show the active rules behind a prediction"),
    ):
        p = sub.add_parser(name, help=description)
        p.add_argument("--model", required=True, help="model file")
        p.add_argument("--config", help="knob_config file")
        p.add_argument(
            "--set",
            action="append",
            metavar="NAME=VALUE",
            help="override one knob (repeatable)",
        )
        p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=handler)

    p = sub.add_parser("transfer", help="build an estimator from stored experiences")
    p.add_argument("--repo", help="repository path (default $IWEK_REPO)")
    p.add_argument("--log", help="query_log file for the target fingerprint")
    p.add_argument("--fingerprint", help="fingerprint file for the target")
    p.add_argument("--labels", help="kp_dataset of measured target labels")
    p.add_argument("--sim-scenario", help="label via this synthetic scenario instead")
    p.add_argument("--sim-seed", type=int, default=0, help="suite seed for --sim-scenario")
    p.add_argument("--K", type=int, default=3, help="experiences to match")
    p.add_argument("--N", type=int, default=10, help="probe design size")
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.add_argument("--out", help="also write the transferred model here")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_transfer)

    p = sub.add_parser("repo", help="manage the experience repository")
    p.add_argument("--repo", help="repository path (default $IWEK_REPO)")
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    actions = p.add_subparsers(dest="action", required=True, metavar="action")
    actions.add_parser("init", help="create an empty repository")
    actions.add_parser("list", help="list stored experiences")
    pa = actions.add_parser("add", help="store an experience document")
    pa.add_argument("file", help="experience file")
    pa.add_argument("--overwrite", action="store_true", help="replace an existing entry")
    ps = actions.add_parser("show", help="print one experience")
    ps.add_argument("id", help="experience id")
    actions.add_parser("models", help="list stored transferred models")
    p.set_defaults(func=_cmd_repo)

    p = sub.add_parser("eval", help="run the evaluation harness")
    p.add_argument(
        "which",
        nargs="?",
        choices=("origin", "transfer", "robustness", "recall", "all"),
        default="all",
        help="which report to produce (default: all)",
    )
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.add_argument("--budget", type=int, default=30, help="forest search budget")
    p.add_argument("--report", help="CSV file for a single report")
    p.add_argument("--out", help="directory for CSV reports")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--repo", help="repository path (default $IWEK_REPO)")
    p.add_argument("--seed", type=int, default=0, help=_SEED_HELP)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        (exc.parser or parser).print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version print and leave
        code = exc.code if isinstance(exc.code, int) else 0
        return EXIT_OK if code == 0 else EXIT_USAGE

    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        raise
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
