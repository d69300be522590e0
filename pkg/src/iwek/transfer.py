"""Two-stage transfer of tuning experiences to a new workload.

Stage one matches stored experiences to the target workload by the
Euclidean distance between fingerprints and transfers a knob ranking as
a similarity-weighted average.  Stage two samples a small design over
the transferred important knobs, compares the target's measured
performance curve with each member's predicted curve through spline
coefficients, and blends the member estimators with weights from that
curve similarity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from iwek import serialize
from iwek.core import (
    DataError,
    Experience,
    Fingerprint,
    KnobConfig,
    KnobRanking,
    KnobSpec,
    KPDataset,
    QueryLog,
)

DEFAULT_K = 3
DEFAULT_N = 10
DEFAULT_DESIGN_KNOBS = 3
SPLINE_KNOTS = 3
EPSILON = 1e-6


def fingerprint_from_log(log: QueryLog) -> Fingerprint:
    """Normalize a log's statement and operator counts into ratios.

    A sub-vector with zero total stays all-zero.
    """

    def normalized(counts):
        total = sum(counts)
        if total == 0:
            return tuple(0.0 for _ in counts)
        return tuple(c / total for c in counts)

    return Fingerprint(normalized(log.suid_counts), normalized(log.op_counts))


def dis_ranking(f1: Fingerprint, f2: Fingerprint) -> float:
    """Euclidean distance between two fingerprints' 12-vectors."""
    a = np.asarray(f1.as_vector())
    b = np.asarray(f2.as_vector())
    return float(np.sqrt(((a - b) ** 2).sum()))


def similarity_weights(distances: Sequence[float], epsilon: float = EPSILON):
    """Inverse-distance weights normalized to sum to 1."""
    if len(distances) == 0:
        raise DataError("at least one distance is required")
    inv = [1.0 / (float(d) + epsilon) for d in distances]
    total = sum(inv)
    return tuple(v / total for v in inv)


@dataclass(frozen=True)
class MatchResult:
    """Top matches by fingerprint distance, ascending.  ``truncated``
    marks that fewer experiences existed than were asked for."""

    members: tuple[Experience, ...]
    distances: tuple[float, ...]
    truncated: bool


def match_experiences(
    experiences: Sequence[Experience], f: Fingerprint, K: int
) -> MatchResult:
    """The K stored experiences nearest to a target fingerprint."""
    if K < 1:
        raise DataError("K must be >= 1")
    if len(experiences) == 0:
        raise DataError("no experiences to match against")
    scored = sorted(
        ((dis_ranking(e.fingerprint, f), i) for i, e in enumerate(experiences)),
        key=lambda pair: (pair[0], pair[1]),
    )
    take = scored[:K]
    return MatchResult(
        members=tuple(experiences[i] for _, i in take),
        distances=tuple(d for d, _ in take),
        truncated=len(experiences) < K,
    )


def transfer_ranking(
    experiences: Sequence[Experience], weights: Sequence[float]
) -> KnobRanking:
    """Weighted average of member rankings over the union of their knobs.

    Each member's scores are min-max normalized first so differing raw
    importance scales cannot dominate the average; a member with all-equal
    scores contributes 0.5 for each of its knobs.  Knobs absent from a
    member contribute 0 for that member.
    """
    if len(experiences) != len(weights):
        raise DataError("one weight per experience required")
    if len(experiences) == 0:
        raise DataError("at least one experience is required")
    for w in weights:
        if w < 0:
            raise DataError("weights must be >= 0")
    union: dict[str, float] = {}
    for e, w in zip(experiences, weights):
        scores = dict(e.ranking.weights)
        lo = min(scores.values())
        hi = max(scores.values())
        span = hi - lo
        for name, score in scores.items():
            normalized = 0.5 if span == 0 else (score - lo) / span
            union[name] = union.get(name, 0.0) + w * normalized
    return KnobRanking(tuple(union.items()))


@dataclass(frozen=True)
class SampleDesign:
    """A Latin hypercube design: the sampled configurations plus the
    unit-interval matrix they were mapped from, one row per config in
    the same order."""

    configs: tuple[KnobConfig, ...]
    unit: tuple[tuple[float, ...], ...]
    knob_names: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        if len(self.configs) < 4:
            raise DataError("a design needs at least 4 samples")
        if len(self.unit) != len(self.configs):
            raise DataError("one unit row per config required")


def lhs_sample(N: int, specs: Sequence[KnobSpec], seed: int = 0) -> SampleDesign:
    """Latin hypercube sample: one point per 1/N stratum on every knob.

    Stratum order is an independent seeded permutation per knob, with a
    uniform offset inside each stratum.  Integer knobs round to the
    nearest whole value inside their range; the exact stratum property
    is retained in the unit matrix.
    """
    if N < 4:
        raise DataError("a design needs at least 4 samples")
    if len(specs) == 0:
        raise DataError("at least one knob is required")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 19]))
    unit = np.empty((N, len(specs)))
    for j, _ in enumerate(specs):
        order = rng.permutation(N)
        offsets = rng.uniform(size=N)
        unit[:, j] = (order + offsets) / N
    configs = []
    for i in range(N):
        values = {}
        for j, spec in enumerate(specs):
            lo, hi = spec.range
            raw = lo + unit[i, j] * (hi - lo)
            if spec.kind == "continuous":
                values[spec.name] = float(raw)
            else:
                values[spec.name] = int(min(hi, max(lo, round(raw))))
        configs.append(KnobConfig.from_mapping(values))
    return SampleDesign(
        configs=tuple(configs),
        unit=tuple(tuple(float(v) for v in row) for row in unit),
        knob_names=tuple(s.name for s in specs),
        seed=int(seed),
    )


def reshape_config(
    x: KnobConfig, member_specs: Sequence[KnobSpec]
) -> KnobConfig | None:
    """Restate a configuration over another experience's knob universe.

    Shared knobs keep their values, knobs the member expects but the
    input lacks take the member's defaults, and extra input knobs are
    dropped.  ``None`` marks a complete mismatch: no knob is shared, so
    the member cannot say anything about the configuration.
    """
    member_names = [s.name for s in member_specs]
    shared = [name for name in member_names if name in x]
    if not shared:
        return None
    values = {}
    for spec in member_specs:
        values[spec.name] = x.get(spec.name, spec.default)
    return KnobConfig.from_mapping(values)


@dataclass(frozen=True)
class DistributionFeature:
    """Spline coefficients summarizing a performance curve, plus the
    label normalization they were computed under."""

    coefficients: tuple[float, ...]
    y_min: float
    y_range: float


def spline_features(kp: KPDataset, knots: int = SPLINE_KNOTS) -> DistributionFeature:
    """Fit a natural cubic spline over the canonical point index.

    Rows are ordered by ascending lexicographic config values so that
    features computed from the same design are comparable entry by
    entry.  Labels are min-max scaled to [0, 1]; constant labels map to
    the constant 0.5 function, whose coefficients are returned directly.
    """
    n = len(kp)
    if n < 4:
        raise DataError("spline features need at least 4 points")
    order = sorted(range(n), key=lambda i: kp.X[i].values)
    y = np.asarray([kp.y[i] for i in order], dtype=float)
    y_min = float(y.min())
    y_range = float(y.max()) - y_min
    width = 3 + knots
    if y_range == 0.0:
        coefficients = (0.5,) + (0.0,) * (width - 1)
        return DistributionFeature(coefficients, y_min, 0.0)
    y01 = (y - y_min) / y_range
    u = np.arange(n) / (n - 1)
    basis = _spline_basis(u, knots)
    coef, *_ = np.linalg.lstsq(basis, y01, rcond=None)
    return DistributionFeature(tuple(float(c) for c in coef), y_min, y_range)


def _spline_basis(u: np.ndarray, knots: int) -> np.ndarray:
    """Columns: 1, u, u², then one truncated-cubic term per interior knot
    at j/(knots+1), each with the global cubic removed so the basis stays
    natural (no free cubic growth)."""
    columns = [np.ones_like(u), u, u**2]
    for j in range(1, knots + 1):
        kappa = j / (knots + 1)
        columns.append(np.clip(u - kappa, 0.0, None) ** 3 - u**3)
    return np.column_stack(columns)


def dis_estimator(d1: Sequence[float], d2: Sequence[float]) -> float:
    """Cosine similarity between two feature vectors; 0 when either is
    the zero vector."""
    a = np.asarray(d1, dtype=float)
    b = np.asarray(d2, dtype=float)
    if a.shape != b.shape:
        raise DataError("feature vectors must have equal length")
    na = float(np.sqrt(a @ a))
    nb = float(np.sqrt(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float((a @ b) / (na * nb))


@dataclass(frozen=True)
class TransferredEstimator:
    """A convex blend of member estimators.

    ``plans`` records, per member, how target knobs map onto the member's
    universe: pairs of (member knob, "target" or "default").  A member
    with an empty plan was a complete mismatch and carries weight 0.
    """

    members: tuple[Experience, ...]
    weights: tuple[float, ...]
    plans: tuple[tuple[tuple[str, str], ...], ...]
    target_knobs: tuple[KnobSpec, ...]

    def __post_init__(self) -> None:
        if not (len(self.members) == len(self.weights) == len(self.plans)):
            raise DataError("members, weights, and plans must align")
        for w in self.weights:
            if w < 0:
                raise DataError("weights must be >= 0")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise DataError("weights must sum to 1")

    def predict(self, x: KnobConfig) -> float:
        return float(self.predict_many([x])[0])

    def predict_many(self, configs: Sequence[KnobConfig]) -> np.ndarray:
        configs = list(configs)
        total = np.zeros(len(configs))
        for member, weight in zip(self.members, self.weights):
            if weight == 0.0:
                continue
            reshaped = [reshape_config(x, member.knob_universe) for x in configs]
            if any(r is None for r in reshaped):
                raise DataError("configuration shares no knob with a member")
            total += weight * member.estimator.predict_many(reshaped)
        return total


def predict_transferred(M: TransferredEstimator, x: KnobConfig) -> float:
    """Weighted member prediction for one configuration."""
    return M.predict(x)


def _member_plan(
    member: Experience, target_names: set[str]
) -> tuple[tuple[str, str], ...]:
    return tuple(
        (spec.name, "target" if spec.name in target_names else "default")
        for spec in member.knob_universe
    )


def blend_experiences(
    match: MatchResult,
    target_kp: KPDataset,
    target_specs: Sequence[KnobSpec],
) -> TransferredEstimator:
    """Weight matched members by how well each predicts the target's
    measured curve, then fold them into one blended estimator.

    ``target_kp`` holds true labels for the design configs.  Members
    whose knob universe shares nothing with the design are kept with
    weight 0; if every member mismatches, there is nothing to transfer.
    """
    d_target = spline_features(target_kp)
    target_names = {s.name for s in target_specs}
    distances: list[float] = []
    usable: list[int] = []
    plans: list[tuple[tuple[str, str], ...]] = []
    for idx, member in enumerate(match.members):
        reshaped = [reshape_config(x, member.knob_universe) for x in target_kp.X]
        if any(r is None for r in reshaped):
            plans.append(())
            continue
        preds = member.estimator.predict_many(reshaped)
        member_kp = KPDataset(
            target_kp.X, tuple(float(p) for p in preds), target_kp.scenario_id
        )
        cos = dis_estimator(
            d_target.coefficients, spline_features(member_kp).coefficients
        )
        distances.append((1.0 - cos) / 2.0)
        usable.append(idx)
        plans.append(_member_plan(member, target_names))
    if not usable:
        raise DataError("no transferable experience: all members mismatch")
    usable_weights = similarity_weights(distances)
    weights = [0.0] * len(match.members)
    for idx, w in zip(usable, usable_weights):
        weights[idx] = w
    return TransferredEstimator(
        members=match.members,
        weights=tuple(weights),
        plans=tuple(plans),
        target_knobs=tuple(target_specs),
    )


def transfer_estimator(
    experiences: Sequence[Experience],
    f: Fingerprint,
    label_source: Callable[[tuple[KnobConfig, ...]], Sequence[float]],
    target_specs: Sequence[KnobSpec],
    K: int = DEFAULT_K,
    N: int = DEFAULT_N,
    seed: int = 0,
    design_knobs: int = DEFAULT_DESIGN_KNOBS,
) -> TransferredEstimator:
    """Full transfer: match, rank, sample, compare curves, blend.

    ``label_source`` maps the sampled design configs to true labels on
    the target (a simulator oracle or recorded measurements).  The
    design covers the top transferred knobs that exist on the target.
    """
    if len(experiences) == 0:
        raise DataError("experience repository is empty")
    match = match_experiences(experiences, f, K)
    fingerprint_weights = similarity_weights(match.distances)
    ranking = transfer_ranking(match.members, fingerprint_weights)
    by_name = {s.name: s for s in target_specs}
    chosen = [name for name in ranking.names if name in by_name][:design_knobs]
    if not chosen:
        raise DataError("no ranked knob exists on the target")
    design = lhs_sample(N, [by_name[name] for name in chosen], seed=seed)
    labels = label_source(design.configs)
    if len(labels) != len(design.configs):
        raise DataError("label source returned a mismatched number of labels")
    target_kp = KPDataset(
        design.configs,
        tuple(float(v) for v in labels),
        "transfer-design",
    )
    return blend_experiences(match, target_kp, target_specs)


serialize.register(
    "sample_design",
    SampleDesign,
    lambda d: {
        "configs": [serialize.body_of(c) for c in d.configs],
        "unit": [list(row) for row in d.unit],
        "knob_names": list(d.knob_names),
        "seed": d.seed,
    },
    lambda b: SampleDesign(
        configs=tuple(serialize.decode_body("knob_config", c) for c in b["configs"]),
        unit=tuple(tuple(float(v) for v in row) for row in b["unit"]),
        knob_names=tuple(b["knob_names"]),
        seed=int(b["seed"]),
    ),
)

serialize.register(
    "transferred_estimator",
    TransferredEstimator,
    lambda m: {
        "members": [serialize.body_of(e) for e in m.members],
        "weights": list(m.weights),
        "plans": [[[knob, source] for knob, source in plan] for plan in m.plans],
        "target_knobs": [serialize.body_of(s) for s in m.target_knobs],
    },
    lambda b: TransferredEstimator(
        members=tuple(
            serialize.decode_body("experience", e) for e in b["members"]
        ),
        weights=tuple(float(w) for w in b["weights"]),
        plans=tuple(
            tuple((knob, source) for knob, source in plan) for plan in b["plans"]
        ),
        target_knobs=tuple(
            serialize.decode_body("knob_spec", s) for s in b["target_knobs"]
        ),
    ),
)
