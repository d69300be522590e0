"""Evaluation harness over the synthetic scenario suite.

Builds, once per suite, the per-scenario artifacts every experiment
shares: a Latin hypercube dataset with a train/test split, a fitted
estimator, a raw-knob penalized-regression baseline, and the stored
experience (fingerprint, ranking, estimator).  The origin, transfer,
and robustness experiments then score against the same held-out points
so their numbers are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from iwek.core import Experience, KnobConfig, KPDataset
from iwek.estimator import InterpretableEstimator, fit_ike
from iwek.forest import dataset_matrix
from iwek.lasso import fit_lasso
from iwek.metrics import mean_prediction_error, pair_accuracy, pearson
from iwek.ranking import default_ensemble, rank_knobs, top_k
from iwek.sim import SyntheticScenario, collect_kp, gen_log, oracle_perf
from iwek.transfer import (
    fingerprint_from_log,
    lhs_sample,
    transfer_estimator,
)

DEFAULT_POINTS = 100
DEFAULT_TRAIN = 70
FINGERPRINT_QUERIES = 10_000


def _scenario_seed(seed: int, index: int, stream: int) -> int:
    """A stable sub-seed per (scenario, purpose) pair."""
    ss = np.random.SeedSequence([int(seed), 37, int(index), int(stream)])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class ScenarioScore:
    """Held-out quality of one model on one scenario."""

    scenario_id: str
    pearson: float
    pair_accuracy: float
    error: float


@dataclass(frozen=True)
class ScenarioContext:
    """Everything the experiments share for one scenario."""

    scenario: SyntheticScenario
    train: KPDataset
    test: KPDataset
    estimator: InterpretableEstimator
    experience: Experience
    origin: ScenarioScore
    baseline: ScenarioScore


def _score(
    scenario_id: str, y_true: np.ndarray, y_pred: np.ndarray, seed: int
) -> ScenarioScore:
    return ScenarioScore(
        scenario_id=scenario_id,
        pearson=pearson(y_true, y_pred),
        pair_accuracy=pair_accuracy(y_true, y_pred, seed=seed),
        error=mean_prediction_error(y_true, y_pred),
    )


def _fit_baseline(train: KPDataset, test: KPDataset, seed: int) -> np.ndarray:
    """Penalized linear regression on the raw knob values themselves.

    Knob columns are scaled to [0, 1] by their spec ranges so the L1
    penalty treats every knob comparably; labels are scaled the same way
    the estimator scales them.
    """
    X_train, y_train, names = dataset_matrix(train)
    X_test, _, _ = dataset_matrix(test)
    spans = {s.name: s.range for s in train.knobs}
    lo = np.array([spans[n][0] for n in names], dtype=float)
    hi = np.array([spans[n][1] for n in names], dtype=float)
    U_train = (X_train - lo) / (hi - lo)
    U_test = (X_test - lo) / (hi - lo)
    y_min = float(y_train.min())
    y_range = float(y_train.max()) - y_min
    fit = fit_lasso(U_train, (y_train - y_min) / y_range, seed=seed)
    pred01 = fit.b + U_test @ np.asarray(fit.w)
    return y_min + y_range * pred01


def build_scenario_context(
    scenario: SyntheticScenario,
    index: int,
    n_points: int = DEFAULT_POINTS,
    train_points: int = DEFAULT_TRAIN,
    budget: int = 30,
    seed: int = 0,
) -> ScenarioContext:
    """Sample, split, fit, and score one scenario."""
    design = lhs_sample(
        n_points, scenario.knobs, seed=_scenario_seed(seed, index, 0)
    )
    D = collect_kp(scenario, design.configs, noisy=True)
    train = KPDataset(D.X[:train_points], D.y[:train_points], D.scenario_id, D.knobs)
    test = KPDataset(D.X[train_points:], D.y[train_points:], D.scenario_id, D.knobs)
    estimator = fit_ike(train, budget=budget, seed=seed)
    y_test = np.asarray(test.y)
    origin = _score(
        D.scenario_id, y_test, estimator.predict_many(test.X), seed=seed
    )
    baseline = _score(
        D.scenario_id, y_test, _fit_baseline(train, test, seed), seed=seed
    )
    log = gen_log(
        scenario, FINGERPRINT_QUERIES, seed=_scenario_seed(seed, index, 1)
    )
    experience = Experience(
        fingerprint=fingerprint_from_log(log),
        ranking=rank_knobs(default_ensemble(seed), train, seed=seed),
        estimator=estimator,
        knob_universe=scenario.knobs,
        scenario_id=D.scenario_id,
    )
    return ScenarioContext(
        scenario=scenario,
        train=train,
        test=test,
        estimator=estimator,
        experience=experience,
        origin=origin,
        baseline=baseline,
    )


def build_suite_context(
    suite,
    n_points: int = DEFAULT_POINTS,
    train_points: int = DEFAULT_TRAIN,
    budget: int = 30,
    seed: int = 0,
) -> tuple[ScenarioContext, ...]:
    """Scenario contexts for a whole suite, in suite order."""
    return tuple(
        build_scenario_context(
            scenario, index, n_points, train_points, budget, seed
        )
        for index, scenario in enumerate(suite)
    )


@dataclass(frozen=True)
class OriginReport:
    """Per-scenario origin quality plus the raw-knob baseline."""

    scores: tuple[ScenarioScore, ...]
    baseline_scores: tuple[ScenarioScore, ...]

    @property
    def avg_pearson(self) -> float:
        return float(np.mean([s.pearson for s in self.scores]))

    @property
    def avg_pair_accuracy(self) -> float:
        return float(np.mean([s.pair_accuracy for s in self.scores]))

    @property
    def baseline_avg_pearson(self) -> float:
        return float(np.mean([s.pearson for s in self.baseline_scores]))


def run_origin_eval(suite, seed: int = 0, context=None) -> OriginReport:
    """Train-on-70, test-on-30 quality of the estimator per scenario."""
    context = context or build_suite_context(suite, seed=seed)
    return OriginReport(
        scores=tuple(c.origin for c in context),
        baseline_scores=tuple(c.baseline for c in context),
    )


@dataclass(frozen=True)
class TransferReport:
    """Leave-one-scenario-out transfer quality."""

    scores: tuple[ScenarioScore, ...]
    K: int
    N: int

    @property
    def avg_pearson(self) -> float:
        return float(np.mean([s.pearson for s in self.scores]))

    @property
    def avg_pair_accuracy(self) -> float:
        return float(np.mean([s.pair_accuracy for s in self.scores]))


def run_transfer_eval(
    suite, K: int = 3, N: int = 10, seed: int = 0, context=None
) -> TransferReport:
    """Transfer onto each scenario from the other scenarios' experiences.

    The target's fingerprint comes from a fresh sampled log, design
    labels from the noisy oracle, and scoring from the same held-out
    split the origin evaluation used.
    """
    context = context or build_suite_context(suite, seed=seed)
    scores = []
    for index, ctx in enumerate(context):
        others = [c.experience for i, c in enumerate(context) if i != index]
        target = ctx.scenario
        log = gen_log(
            target, FINGERPRINT_QUERIES, seed=_scenario_seed(seed, index, 2)
        )
        model = transfer_estimator(
            others,
            fingerprint_from_log(log),
            lambda configs: [oracle_perf(target, x, noisy=True) for x in configs],
            target_specs=target.knobs,
            K=K,
            N=N,
            seed=_scenario_seed(seed, index, 3),
        )
        y_test = np.asarray(ctx.test.y)
        scores.append(
            _score(ctx.scenario.scenario.id, y_test, model.predict_many(ctx.test.X), seed=seed)
        )
    return TransferReport(scores=tuple(scores), K=K, N=N)


@dataclass(frozen=True)
class RobustnessReport:
    """Average transfer quality as the match count K varies."""

    rows: tuple[tuple[int, float, float], ...]  # (K, avg pearson, avg accuracy)

    @property
    def accuracy_spread(self) -> float:
        accs = [acc for _, _, acc in self.rows]
        return max(accs) - min(accs)

    def pearson_at(self, K: int) -> float:
        for k, p, _ in self.rows:
            if k == K:
                return p
        raise KeyError(K)

    @property
    def best_pearson(self) -> float:
        return max(p for _, p, _ in self.rows)


def run_robustness_sweep(
    suite, Ks=tuple(range(1, 7)), seed: int = 0, context=None
) -> RobustnessReport:
    """Transfer evaluation repeated for each candidate K."""
    context = context or build_suite_context(suite, seed=seed)
    rows = []
    for K in Ks:
        report = run_transfer_eval(suite, K=K, seed=seed, context=context)
        rows.append((int(K), report.avg_pearson, report.avg_pair_accuracy))
    return RobustnessReport(rows=tuple(rows))


@dataclass(frozen=True)
class RecallReport:
    """Top-3 important-knob recall per scenario, from the noiseless oracle."""

    rows: tuple[tuple[str, float], ...]

    @property
    def avg_recall(self) -> float:
        return float(np.mean([r for _, r in self.rows]))


def ranking_recall(suite, n_points: int = 70, seed: int = 0) -> RecallReport:
    """Rank knobs on noiseless data and compare against ground truth."""
    rows = []
    for index, scenario in enumerate(suite):
        design = lhs_sample(
            n_points, scenario.knobs, seed=_scenario_seed(seed, index, 4)
        )
        D = collect_kp(scenario, design.configs, noisy=False)
        ranking = rank_knobs(default_ensemble(seed), D, seed=seed)
        found = set(top_k(ranking, 3))
        truth = set(scenario.important_knobs())
        rows.append((scenario.scenario.id, len(found & truth) / 3.0))
    return RecallReport(rows=tuple(rows))


def origin_csv(report: OriginReport) -> str:
    lines = ["scenario,pearson,pair_accuracy,error,baseline_pearson"]
    by_id = {s.scenario_id: s for s in report.baseline_scores}
    for s in report.scores:
        b = by_id[s.scenario_id]
        lines.append(
            f"{s.scenario_id},{s.pearson!r},{s.pair_accuracy!r},{s.error!r},{b.pearson!r}"
        )
    return "\n".join(lines) + "\n"


def transfer_csv(report: TransferReport) -> str:
    lines = ["scenario,pearson,pair_accuracy,error"]
    for s in report.scores:
        lines.append(f"{s.scenario_id},{s.pearson!r},{s.pair_accuracy!r},{s.error!r}")
    return "\n".join(lines) + "\n"


def robustness_csv(report: RobustnessReport) -> str:
    lines = ["K,avg_pearson,avg_pair_accuracy"]
    for K, p, acc in report.rows:
        lines.append(f"{K},{p!r},{acc!r}")
    return "\n".join(lines) + "\n"


def recall_csv(report: RecallReport) -> str:
    lines = ["scenario,top3_recall"]
    for scenario_id, recall in report.rows:
        lines.append(f"{scenario_id},{recall!r}")
    return "\n".join(lines) + "\n"
