"""Core domain types shared by every other module.

All types are immutable after construction and validate eagerly, so bad
data fails at the boundary instead of deep inside a fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:  # avoids a circular import; estimator depends on core
    from iwek.estimator import InterpretableEstimator

FORMAT_VERSION = "iwek-v1"

# Statement classes of the query fingerprint, in canonical order.
SUID_FIELDS = ("select", "update", "insert", "delete")

# Fixed plan-operator vocabulary of the query fingerprint, in canonical order.
OPERATOR_VOCABULARY = (
    "seq_scan",
    "index_scan",
    "bitmap_scan",
    "sort",
    "hash_join",
    "nested_loop",
    "merge_join",
    "aggregate",
)

KNOB_KINDS = ("continuous", "integer", "ordinal")


class IwekError(Exception):
    """Base class for every error raised by this package."""


class DataError(IwekError):
    """Invalid input data: bad configs, malformed documents, missing files."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DataError(message)


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


@dataclass(frozen=True)
class KnobSpec:
    """One tunable knob: value kind, inclusive range, and default.

    ``ordinal`` knobs model categorical settings as integer levels; the
    optional ``levels`` tuple documents the level-index-to-label mapping.
    """

    name: str
    kind: str
    range: tuple[float, float]
    default: float
    levels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "range", (float(self.range[0]), float(self.range[1])))
        object.__setattr__(self, "default", float(self.default))
        object.__setattr__(self, "levels", tuple(self.levels))
        _require(bool(self.name), "knob name must be non-empty")
        _require(self.kind in KNOB_KINDS, f"unknown knob kind {self.kind!r}")
        lo, hi = self.range
        _require(_finite(lo) and _finite(hi), f"knob {self.name}: range must be finite")
        _require(lo < hi, f"knob {self.name}: range low {lo} must be below high {hi}")
        _require(
            lo <= self.default <= hi,
            f"knob {self.name}: default {self.default} outside range [{lo}, {hi}]",
        )
        if self.kind == "ordinal" and self.levels:
            _require(
                (lo, hi) == (0.0, float(len(self.levels) - 1)),
                f"knob {self.name}: ordinal range must span the level indices",
            )


@dataclass(frozen=True)
class ConfigViolation:
    """One reason a configuration value is invalid for a knob universe."""

    knob: str
    value: float | None
    reason: str


@dataclass(frozen=True)
class KnobConfig:
    """An assignment of values to knobs, iterated in lexicographic name order."""

    assignments: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        pairs = tuple(sorted((str(k), float(v)) for k, v in self.assignments))
        names = [k for k, _ in pairs]
        _require(len(set(names)) == len(names), "duplicate knob name in config")
        for name, value in pairs:
            _require(_finite(value), f"knob {name}: value must be finite")
        object.__setattr__(self, "assignments", pairs)

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "KnobConfig":
        return cls(tuple(values.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.assignments)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.assignments)

    def as_dict(self) -> dict[str, float]:
        return dict(self.assignments)

    def get(self, name: str, default: float | None = None) -> float | None:
        for k, v in self.assignments:
            if k == name:
                return v
        return default

    def __contains__(self, name: str) -> bool:
        return any(k == name for k, _ in self.assignments)

    def with_value(self, name: str, value: float) -> "KnobConfig":
        updated = dict(self.assignments)
        updated[name] = value
        return KnobConfig.from_mapping(updated)


def default_config(specs: Sequence[KnobSpec]) -> KnobConfig:
    """The configuration holding every knob at its default."""
    return KnobConfig.from_mapping({s.name: s.default for s in specs})


def complete_config(config: KnobConfig, specs: Sequence[KnobSpec]) -> KnobConfig:
    """Fill knobs absent from ``config`` with their spec defaults."""
    values = {s.name: s.default for s in specs}
    values.update(config.as_dict())
    return KnobConfig.from_mapping(values)


def validate_config(
    config: KnobConfig,
    specs: Sequence[KnobSpec],
    require_complete: bool = False,
) -> list[ConfigViolation]:
    """Check a configuration against a knob universe.

    Returns an empty list when the configuration is acceptable.  Knobs
    absent from the config are violations only when ``require_complete``.
    """
    by_name = {s.name: s for s in specs}
    violations: list[ConfigViolation] = []
    for name, value in config.assignments:
        spec = by_name.get(name)
        if spec is None:
            violations.append(ConfigViolation(name, value, "unknown knob"))
            continue
        lo, hi = spec.range
        if not lo <= value <= hi:
            violations.append(
                ConfigViolation(name, value, f"value outside range [{lo}, {hi}]")
            )
        elif spec.kind in ("integer", "ordinal") and value != round(value):
            violations.append(ConfigViolation(name, value, "value must be an integer"))
    if require_complete:
        present = set(config.names)
        for spec in specs:
            if spec.name not in present:
                violations.append(ConfigViolation(spec.name, None, "missing knob"))
    return violations


@dataclass(frozen=True)
class KPDataset:
    """Knob-performance observations: configurations with throughput labels.

    ``knobs`` optionally carries the knob universe the configs were drawn
    from, so datasets written to disk stay self-describing.
    """

    X: tuple[KnobConfig, ...]
    y: tuple[float, ...]
    scenario_id: str
    knobs: tuple[KnobSpec, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "X", tuple(self.X))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        object.__setattr__(self, "knobs", tuple(self.knobs))
        _require(len(self.X) == len(self.y), "X and y must have equal length")
        _require(len(self.X) > 0, "dataset must be non-empty")
        for value in self.y:
            _require(_finite(value), "labels must be finite")
        names = self.X[0].names
        for config in self.X[1:]:
            _require(
                config.names == names,
                "all configs in a dataset must share one knob universe",
            )

    def __len__(self) -> int:
        return len(self.X)

    @property
    def knob_names(self) -> tuple[str, ...]:
        return self.X[0].names


@dataclass(frozen=True)
class Scenario:
    """A workload: transaction-class mix, data scale, and environment tag."""

    id: str
    data_scale: float
    txn_mix: tuple[tuple[str, float], ...]
    env_tag: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "txn_mix", tuple((str(k), float(v)) for k, v in self.txn_mix)
        )
        object.__setattr__(self, "data_scale", float(self.data_scale))
        _require(bool(self.id), "scenario id must be non-empty")
        _require(self.data_scale > 0, "data scale must be positive")
        _require(len(self.txn_mix) > 0, "transaction mix must be non-empty")
        for name, ratio in self.txn_mix:
            _require(_finite(ratio) and ratio >= 0, f"mix ratio for {name} must be >= 0")
        total = sum(ratio for _, ratio in self.txn_mix)
        _require(abs(total - 1.0) <= 1e-9, f"mix ratios must sum to 1, got {total}")

    def mix_dict(self) -> dict[str, float]:
        return dict(self.txn_mix)


@dataclass(frozen=True)
class Fingerprint:
    """Workload fingerprint: statement-class ratios plus operator ratios."""

    suid: tuple[float, float, float, float]
    ops: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "suid", tuple(float(v) for v in self.suid))
        object.__setattr__(self, "ops", tuple(float(v) for v in self.ops))
        _require(len(self.suid) == len(SUID_FIELDS), "suid vector must have 4 entries")
        _require(
            len(self.ops) == len(OPERATOR_VOCABULARY),
            "operator vector must have 8 entries",
        )
        for value in self.suid + self.ops:
            _require(_finite(value) and value >= 0, "fingerprint ratios must be >= 0")
        for total in (sum(self.suid), sum(self.ops)):
            _require(
                abs(total - 1.0) <= 1e-9 or total == 0.0,
                "fingerprint ratios must sum to 1, or be all zero",
            )

    def as_vector(self) -> tuple[float, ...]:
        return self.suid + self.ops


@dataclass(frozen=True)
class QueryLog:
    """Aggregate counts from a workload trace, aligned to the canonical
    statement order and operator vocabulary."""

    suid_counts: tuple[int, int, int, int]
    op_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "suid_counts", tuple(int(v) for v in self.suid_counts))
        object.__setattr__(self, "op_counts", tuple(int(v) for v in self.op_counts))
        _require(
            len(self.suid_counts) == len(SUID_FIELDS),
            "suid counts must have 4 entries",
        )
        _require(
            len(self.op_counts) == len(OPERATOR_VOCABULARY),
            "operator counts must have 8 entries",
        )
        for value in self.suid_counts + self.op_counts:
            _require(value >= 0, "counts must be >= 0")


@dataclass(frozen=True)
class KnobRanking:
    """Knob importance scores, held in descending-score order.

    Ties are broken by lexicographic knob name so the order is total.
    """

    weights: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        pairs = tuple(
            sorted(
                ((str(k), float(v)) for k, v in self.weights),
                key=lambda kv: (-kv[1], kv[0]),
            )
        )
        names = [k for k, _ in pairs]
        _require(len(set(names)) == len(names), "duplicate knob in ranking")
        _require(len(pairs) > 0, "ranking must cover at least one knob")
        for name, score in pairs:
            _require(_finite(score), f"score for {name} must be finite")
        object.__setattr__(self, "weights", pairs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.weights)

    def top(self, k: int) -> tuple[str, ...]:
        _require(k >= 1, "top-k size must be >= 1")
        return self.names[:k]

    def score(self, name: str) -> float:
        for k, v in self.weights:
            if k == name:
                return v
        raise DataError(f"knob {name!r} not present in ranking")


@dataclass(frozen=True)
class Experience:
    """One stored tuning outcome: fingerprint, ranking, and fitted estimator."""

    fingerprint: Fingerprint
    ranking: KnobRanking
    estimator: "InterpretableEstimator"
    knob_universe: tuple[KnobSpec, ...]
    scenario_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "knob_universe", tuple(self.knob_universe))
        _require(bool(self.scenario_id), "scenario id must be non-empty")
        _require(len(self.knob_universe) > 0, "knob universe must be non-empty")
        names = [s.name for s in self.knob_universe]
        _require(len(set(names)) == len(names), "duplicate knob in universe")
