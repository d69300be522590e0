"""Synthetic workload simulator with a closed-form performance oracle.

Each scenario owns a ground-truth throughput surface over the knob
universe: a baseline of 1.0 at the default configuration plus per-knob
response curves and a few pairwise interactions.  Scenarios in the same
workload family share shape assignments and an important-knob trio, and
their curve parameters move linearly with the transaction mix and data
scale, so similar workloads have similar knob-performance trends.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from iwek import serialize
from iwek.core import (
    DataError,
    Fingerprint,
    KnobConfig,
    KnobSpec,
    KPDataset,
    OPERATOR_VOCABULARY,
    QueryLog,
    Scenario,
    SUID_FIELDS,
    complete_config,
    default_config,
    validate_config,
)

RESPONSE_SHAPES = ("saturating", "peaked_quadratic", "step", "flat")

# Postgres-flavored knob universe, in lexicographic name order.
DEFAULT_KNOBS: tuple[KnobSpec, ...] = (
    KnobSpec("checkpoint_completion_target", "continuous", (0.1, 1.0), 0.5),
    KnobSpec("commit_delay", "integer", (0, 10000), 0),
    KnobSpec("default_statistics_target", "integer", (10, 1000), 100),
    KnobSpec("effective_cache_size", "integer", (256, 32768), 4096),
    KnobSpec("effective_io_concurrency", "integer", (1, 512), 1),
    KnobSpec("maintenance_work_mem", "integer", (16, 4096), 64),
    KnobSpec("max_parallel_workers", "integer", (0, 16), 2),
    KnobSpec("max_wal_size", "integer", (256, 8192), 1024),
    KnobSpec("random_page_cost", "continuous", (1.0, 8.0), 4.0),
    KnobSpec("shared_buffers", "integer", (64, 16384), 128),
    KnobSpec("wal_buffers", "integer", (1, 256), 16),
    KnobSpec("work_mem", "integer", (1, 1024), 4),
)

TPCC_CLASSES = ("neworder", "payment", "orderstatus", "delivery", "stocklevel")
YCSB_CLASSES = (
    "read_record",
    "insert_record",
    "scan_record",
    "update_record",
    "delete_record",
    "read_modify_write_record",
)

# Statement-class profile per transaction class, ordered as SUID_FIELDS.
CLASS_SUID: dict[str, tuple[float, float, float, float]] = {
    "neworder": (0.40, 0.30, 0.30, 0.00),
    "payment": (0.20, 0.60, 0.20, 0.00),
    "orderstatus": (1.00, 0.00, 0.00, 0.00),
    "delivery": (0.20, 0.40, 0.00, 0.40),
    "stocklevel": (1.00, 0.00, 0.00, 0.00),
    "read_record": (1.00, 0.00, 0.00, 0.00),
    "insert_record": (0.00, 0.00, 1.00, 0.00),
    "scan_record": (1.00, 0.00, 0.00, 0.00),
    "update_record": (0.00, 1.00, 0.00, 0.00),
    "delete_record": (0.00, 0.00, 0.00, 1.00),
    "read_modify_write_record": (0.50, 0.50, 0.00, 0.00),
}

# Plan-operator profile per transaction class, ordered as OPERATOR_VOCABULARY:
# (seq_scan, index_scan, bitmap_scan, sort, hash_join, nested_loop,
#  merge_join, aggregate).
CLASS_OPS: dict[str, tuple[float, ...]] = {
    "neworder": (0.00, 0.45, 0.00, 0.05, 0.00, 0.40, 0.00, 0.10),
    "payment": (0.00, 0.75, 0.00, 0.00, 0.25, 0.00, 0.00, 0.00),
    "orderstatus": (0.00, 0.35, 0.00, 0.30, 0.00, 0.00, 0.35, 0.00),
    "delivery": (0.00, 0.25, 0.30, 0.15, 0.30, 0.00, 0.00, 0.00),
    "stocklevel": (0.50, 0.00, 0.10, 0.00, 0.00, 0.00, 0.00, 0.40),
    # Key-value classes never join: single-table point and range ops.
    "read_record": (0.00, 0.85, 0.15, 0.00, 0.00, 0.00, 0.00, 0.00),
    "insert_record": (0.00, 1.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00),
    "scan_record": (0.35, 0.45, 0.10, 0.10, 0.00, 0.00, 0.00, 0.00),
    "update_record": (0.00, 0.80, 0.20, 0.00, 0.00, 0.00, 0.00, 0.00),
    "delete_record": (0.00, 0.90, 0.10, 0.00, 0.00, 0.00, 0.00, 0.00),
    "read_modify_write_record": (0.00, 1.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00),
}

# Workload suite: (id, data scale in GB, mix percentages over the family's
# transaction classes).
_TPCC_ROWS = (
    ("tpcc-1", 1.0, (45, 40, 5, 5, 5)),
    ("tpcc-2", 1.0, (5, 45, 5, 40, 5)),
    ("tpcc-3", 1.0, (20, 10, 50, 15, 5)),
    ("tpcc-4", 3.0, (60, 20, 10, 5, 5)),
    ("tpcc-5", 3.0, (10, 20, 10, 30, 30)),
    ("tpcc-6", 3.0, (20, 10, 50, 15, 5)),
    ("tpcc-7", 5.0, (45, 40, 5, 5, 5)),
    ("tpcc-8", 5.0, (5, 45, 5, 40, 5)),
)
_YCSB_ROWS = (
    ("ycsb-1", 1.0, (50, 5, 15, 10, 10, 10)),
    ("ycsb-2", 1.0, (20, 5, 15, 25, 10, 25)),
    ("ycsb-3", 1.0, (20, 50, 10, 10, 5, 5)),
    ("ycsb-4", 1.0, (20, 10, 15, 20, 10, 25)),
    ("ycsb-5", 3.0, (10, 5, 15, 10, 30, 30)),
    ("ycsb-6", 3.0, (30, 10, 20, 20, 10, 10)),
    ("ycsb-7", 5.0, (50, 5, 15, 10, 10, 10)),
    ("ycsb-8", 5.0, (20, 5, 15, 25, 10, 25)),
)

_FAMILIES = {"tpcc": (0, TPCC_CLASSES), "ycsb": (1, YCSB_CLASSES)}

# Amplitude bands.  The low edge of the important band is 10x the high
# edge of the minor band, so the important trio always clears a 5x margin.
_IMPORTANT_AMP = (0.30, 0.45)
_MINOR_AMP = (0.01, 0.03)
_INTERACTION_AMP = (0.02, 0.05)
_SCALE_WEIGHT = 0.2
_MAX_DATA_SCALE = 5.0
_NOISE_FRACTION = 0.02


@dataclass(frozen=True)
class KnobResponse:
    """One knob's contribution to the oracle surface."""

    knob: str
    shape: str
    amplitude: float
    optimum: float

    def __post_init__(self) -> None:
        if self.shape not in RESPONSE_SHAPES:
            raise DataError(f"unknown response shape {self.shape!r}")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise DataError(f"response amplitude for {self.knob} must be >= 0")
        if not 0.0 <= self.optimum <= 1.0:
            raise DataError(f"response optimum for {self.knob} must lie in [0, 1]")

    def curve(self, u: float) -> float:
        """Shape value at normalized knob position ``u`` in [0, 1]."""
        if self.shape == "saturating":
            return 1.0 - math.exp(-4.0 * u)
        if self.shape == "peaked_quadratic":
            return -((u - self.optimum) ** 2)
        if self.shape == "step":
            return 1.0 if u >= self.optimum else 0.0
        return 0.0


@dataclass(frozen=True)
class KnobInteraction:
    """A pairwise knob interaction, bilinear around the defaults."""

    knobs: tuple[str, str]
    amplitude: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "knobs", tuple(self.knobs))
        if len(self.knobs) != 2 or self.knobs[0] == self.knobs[1]:
            raise DataError("interaction needs two distinct knobs")
        if not math.isfinite(self.amplitude):
            raise DataError("interaction amplitude must be finite")


@dataclass(frozen=True)
class SyntheticScenario:
    """A scenario together with its ground-truth oracle parameters."""

    scenario: Scenario
    knobs: tuple[KnobSpec, ...]
    baseline: float
    responses: tuple[KnobResponse, ...]
    interactions: tuple[KnobInteraction, ...]
    noise_sigma: float
    noise_seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "knobs", tuple(self.knobs))
        object.__setattr__(self, "responses", tuple(self.responses))
        object.__setattr__(self, "interactions", tuple(self.interactions))
        knob_names = {s.name for s in self.knobs}
        response_names = [r.knob for r in self.responses]
        if sorted(response_names) != sorted(knob_names):
            raise DataError("responses must cover the knob universe exactly once")
        for interaction in self.interactions:
            for name in interaction.knobs:
                if name not in knob_names:
                    raise DataError(f"interaction references unknown knob {name!r}")
        if self.noise_sigma < 0:
            raise DataError("noise sigma must be >= 0")

    @property
    def id(self) -> str:
        return self.scenario.id

    def spec(self, name: str) -> KnobSpec:
        for s in self.knobs:
            if s.name == name:
                return s
        raise DataError(f"unknown knob {name!r}")

    def important_knobs(self) -> tuple[str, ...]:
        """Ground-truth top knobs by response amplitude, descending."""
        ordered = sorted(self.responses, key=lambda r: (-r.amplitude, r.knob))
        return tuple(r.knob for r in ordered[:3])


@dataclass(frozen=True)
class ScenarioSuite:
    """An ordered collection of synthetic scenarios."""

    scenarios: tuple[SyntheticScenario, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate scenario id in suite")

    def __iter__(self):
        return iter(self.scenarios)

    def __len__(self) -> int:
        return len(self.scenarios)

    def get(self, scenario_id: str) -> SyntheticScenario:
        for s in self.scenarios:
            if s.id == scenario_id:
                return s
        raise DataError(f"unknown scenario {scenario_id!r}")


def _normalized(value: float, spec: KnobSpec) -> float:
    lo, hi = spec.range
    return (value - lo) / (hi - lo)


def _mix_blend(mix: np.ndarray, coef: np.ndarray, scale_frac: float,
               scale_coef: float | np.ndarray) -> np.ndarray | float:
    # Linear in (mix, scale) and bounded in [0, 1] because mix sums to 1
    # and every coefficient lies in [0, 1].
    return (1.0 - _SCALE_WEIGHT) * (coef @ mix) + _SCALE_WEIGHT * scale_frac * scale_coef


def _stable_digest_ints(payload) -> list[int]:
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    digest = hashlib.sha256(raw).digest()
    return [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]


def make_scenario(
    family: str,
    scenario_id: str,
    data_scale: float,
    mix_percent: tuple[float, ...],
    seed: int = 0,
) -> SyntheticScenario:
    """Construct one scenario whose oracle parameters depend only on
    (family, mix, data scale, seed)."""
    if family not in _FAMILIES:
        raise DataError(f"unknown workload family {family!r}")
    family_index, classes = _FAMILIES[family]
    if len(mix_percent) != len(classes):
        raise DataError(
            f"{family} mix needs {len(classes)} ratios, got {len(mix_percent)}"
        )
    mix = np.asarray(mix_percent, dtype=float)
    if mix.min() < 0:
        raise DataError("mix ratios must be >= 0")
    total = float(mix.sum())
    if total <= 0:
        raise DataError("mix ratios must not all be zero")
    mix = mix / total

    n_knobs = len(DEFAULT_KNOBS)
    n_classes = len(classes)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), family_index]))
    # Family-level draws, in fixed order so every scenario of the family
    # sees the same structure.
    important_idx = np.sort(rng.choice(n_knobs, size=3, replace=False))
    # The trio gets one of each non-flat shape so every scenario
    # exercises a saturating, a peaked and a step response.
    important_shapes = rng.permutation(3)
    minor_shapes = rng.integers(0, 4, size=n_knobs - 3)
    amp_coef = rng.random((n_knobs, n_classes))
    amp_scale_coef = rng.random(n_knobs)
    opt_coef = rng.random((n_knobs, n_classes))
    opt_scale_coef = rng.random(n_knobs)
    pair_pick = np.sort(rng.choice(3, size=2, replace=False))
    pair_signs = rng.choice(np.array([-1.0, 1.0]), size=2)
    pair_coef = rng.random((2, n_classes))
    pair_scale_coef = rng.random(2)

    scale_frac = min(float(data_scale), _MAX_DATA_SCALE) / _MAX_DATA_SCALE
    amp_z = _mix_blend(mix, amp_coef, scale_frac, amp_scale_coef)
    opt_z = _mix_blend(mix, opt_coef, scale_frac, opt_scale_coef)

    important = set(int(i) for i in important_idx)
    responses = []
    minor_pos = 0
    for idx, spec in enumerate(DEFAULT_KNOBS):
        if idx in important:
            slot = int(np.where(important_idx == idx)[0][0])
            shape = RESPONSE_SHAPES[int(important_shapes[slot])]
            lo, hi = _IMPORTANT_AMP
        else:
            shape = RESPONSE_SHAPES[int(minor_shapes[minor_pos])]
            minor_pos += 1
            lo, hi = _MINOR_AMP
        amplitude = 0.0 if shape == "flat" else lo + (hi - lo) * float(amp_z[idx])
        optimum = 0.2 + 0.6 * float(opt_z[idx])
        responses.append(KnobResponse(spec.name, shape, amplitude, optimum))

    triples = ((0, 1), (0, 2), (1, 2))
    interactions = []
    for slot, pair in enumerate(int(p) for p in pair_pick):
        a, b = triples[pair]
        name_a = DEFAULT_KNOBS[int(important_idx[a])].name
        name_b = DEFAULT_KNOBS[int(important_idx[b])].name
        z = _mix_blend(mix, pair_coef[slot], scale_frac, float(pair_scale_coef[slot]))
        lo, hi = _INTERACTION_AMP
        amplitude = float(pair_signs[slot]) * (lo + (hi - lo) * float(z))
        interactions.append(KnobInteraction((name_a, name_b), amplitude))

    span = sum(responses[i].amplitude for i in important) + sum(
        abs(i.amplitude) for i in interactions
    )
    noise_sigma = _NOISE_FRACTION * span
    noise_seed = _stable_digest_ints(
        ["noise", int(seed), family, float(data_scale), [float(v) for v in mix]]
    )[0]

    scenario = Scenario(
        id=scenario_id,
        data_scale=data_scale,
        txn_mix=tuple(zip(classes, (float(v) for v in mix))),
        env_tag=f"sim/{family}",
    )
    return SyntheticScenario(
        scenario=scenario,
        knobs=DEFAULT_KNOBS,
        baseline=1.0,
        responses=responses,
        interactions=interactions,
        noise_sigma=noise_sigma,
        noise_seed=noise_seed,
    )


def make_scenario_suite(seed: int = 0) -> ScenarioSuite:
    """The 16-scenario workload suite: 8 TPCC-like plus 8 YCSB-like."""
    scenarios = []
    for family, rows in (("tpcc", _TPCC_ROWS), ("ycsb", _YCSB_ROWS)):
        for scenario_id, scale, mix in rows:
            scenarios.append(make_scenario(family, scenario_id, scale, mix, seed))
    return ScenarioSuite(tuple(scenarios))


def oracle_perf(s: SyntheticScenario, config: KnobConfig, noisy: bool = False) -> float:
    """Ground-truth normalized throughput of one configuration.

    The default configuration scores exactly ``s.baseline`` when
    noiseless.  Noise is a pure function of (scenario, config), so
    repeated evaluation of the same point returns the same value.
    """
    violations = validate_config(config, s.knobs)
    if violations:
        first = violations[0]
        raise DataError(f"invalid config: knob {first.knob!r}: {first.reason}")
    full = complete_config(config, s.knobs)
    positions = {
        name: _normalized(value, s.spec(name)) for name, value in full.assignments
    }
    defaults = {spec.name: _normalized(spec.default, spec) for spec in s.knobs}

    value = s.baseline
    for response in s.responses:
        value += response.amplitude * (
            response.curve(positions[response.knob])
            - response.curve(defaults[response.knob])
        )
    for interaction in s.interactions:
        a, b = interaction.knobs
        value += interaction.amplitude * (positions[a] - defaults[a]) * (
            positions[b] - defaults[b]
        )

    if noisy and s.noise_sigma > 0:
        entropy = [int(s.noise_seed)] + _stable_digest_ints(full.as_dict())
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        value += float(rng.normal(0.0, s.noise_sigma))
    return value


def collect_kp(
    s: SyntheticScenario, configs, noisy: bool = True
) -> KPDataset:
    """Label a batch of configurations with the oracle."""
    configs = tuple(configs)
    if not configs:
        raise DataError("collect_kp needs at least one configuration")
    labels = tuple(oracle_perf(s, c, noisy=noisy) for c in configs)
    full = tuple(complete_config(c, s.knobs) for c in configs)
    return KPDataset(X=full, y=labels, scenario_id=s.id, knobs=s.knobs)


def workload_probabilities(s: SyntheticScenario) -> tuple[np.ndarray, np.ndarray]:
    """Exact statement-class and operator probabilities of a scenario."""
    suid = np.zeros(len(SUID_FIELDS))
    ops = np.zeros(len(OPERATOR_VOCABULARY))
    for name, ratio in s.scenario.txn_mix:
        suid += ratio * np.asarray(CLASS_SUID[name])
        ops += ratio * np.asarray(CLASS_OPS[name])
    return suid, ops


def expected_fingerprint(s: SyntheticScenario) -> Fingerprint:
    """The fingerprint a log of infinite length would converge to."""
    suid, ops = workload_probabilities(s)
    return Fingerprint(suid=tuple(suid / suid.sum()), ops=tuple(ops / ops.sum()))


def gen_log(s: SyntheticScenario, n_queries: int = 100_000, seed: int = 0) -> QueryLog:
    """Sample an aggregate query log for a scenario.  Zero queries give
    an all-zero log."""
    if n_queries < 0:
        raise DataError("query count must be >= 0")
    suid_probs, ops_probs = workload_probabilities(s)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 17]))
    suid_counts = rng.multinomial(n_queries, suid_probs / suid_probs.sum())
    op_counts = rng.multinomial(n_queries, ops_probs / ops_probs.sum())
    return QueryLog(suid_counts=tuple(suid_counts), op_counts=tuple(op_counts))


def default_config_for(s: SyntheticScenario) -> KnobConfig:
    return default_config(s.knobs)


# ---------------------------------------------------------------------------
# Serialization.

serialize.register(
    "knob_response",
    KnobResponse,
    lambda r: {
        "knob": r.knob,
        "shape": r.shape,
        "amplitude": r.amplitude,
        "optimum": r.optimum,
    },
    lambda b: KnobResponse(
        knob=b["knob"],
        shape=b["shape"],
        amplitude=b["amplitude"],
        optimum=b["optimum"],
    ),
)

serialize.register(
    "knob_interaction",
    KnobInteraction,
    lambda i: {"knobs": list(i.knobs), "amplitude": i.amplitude},
    lambda b: KnobInteraction(knobs=tuple(b["knobs"]), amplitude=b["amplitude"]),
)

serialize.register(
    "synthetic_scenario",
    SyntheticScenario,
    lambda s: {
        "scenario": serialize.body_of(s.scenario),
        "knobs": [serialize.body_of(k) for k in s.knobs],
        "baseline": s.baseline,
        "responses": [serialize.body_of(r) for r in s.responses],
        "interactions": [serialize.body_of(i) for i in s.interactions],
        "noise_sigma": s.noise_sigma,
        "noise_seed": s.noise_seed,
    },
    lambda b: SyntheticScenario(
        scenario=serialize.decode_body("scenario", b["scenario"]),
        knobs=tuple(serialize.decode_body("knob_spec", k) for k in b["knobs"]),
        baseline=b["baseline"],
        responses=tuple(
            serialize.decode_body("knob_response", r) for r in b["responses"]
        ),
        interactions=tuple(
            serialize.decode_body("knob_interaction", i) for i in b["interactions"]
        ),
        noise_sigma=b["noise_sigma"],
        noise_seed=b["noise_seed"],
    ),
)

serialize.register(
    "scenario_suite",
    ScenarioSuite,
    lambda suite: {
        "scenarios": [serialize.body_of(s) for s in suite.scenarios]
    },
    lambda b: ScenarioSuite(
        scenarios=tuple(
            serialize.decode_body("synthetic_scenario", s) for s in b["scenarios"]
        )
    ),
)
