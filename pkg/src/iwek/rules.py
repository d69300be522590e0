"""Rule extraction from fitted forests.

Every root-to-leaf path of every tree becomes a candidate rule: the
conjunction of the interval constraints collected along the path.
Splits on the same knob are intersected, so a rule carries at most one
interval per knob.  A configuration satisfies a rule when every knob
value falls inside its interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from iwek.core import DataError
from iwek.forest import Forest
from iwek import serialize


@dataclass(frozen=True)
class Interval:
    """A half-open interval (lo, hi] over one knob."""

    knob: str
    lo: float
    hi: float

    def contains(self, value: float) -> bool:
        return self.lo < value <= self.hi

    def describe(self) -> str:
        if math.isinf(self.lo) and math.isinf(self.hi):
            return f"{self.knob}: any"
        if math.isinf(self.lo):
            return f"{self.knob} <= {self.hi:g}"
        if math.isinf(self.hi):
            return f"{self.knob} > {self.lo:g}"
        return f"{self.lo:g} < {self.knob} <= {self.hi:g}"


@dataclass(frozen=True)
class Rule:
    """A conjunction of intervals, tagged with the path it came from.

    ``source`` is the (tree index, leaf id) pair of the first path that
    produced this conjunction.  An empty conjunction is satisfied by
    every configuration.
    """

    intervals: tuple[Interval, ...]
    source: tuple[int, int]

    def satisfied_by(self, values: dict[str, float]) -> bool:
        return all(iv.contains(values[iv.knob]) for iv in self.intervals)

    def describe(self) -> str:
        if not self.intervals:
            return "always"
        return " and ".join(iv.describe() for iv in self.intervals)


def path_to_intervals(
    feature_names: tuple[str, ...],
    path: list[tuple[int, float, bool]],
) -> tuple[Interval, ...]:
    """Intersect the split constraints of one path into intervals.

    Each step is (feature index, threshold, went_left).  Going left
    means value <= threshold, tightening the upper bound; going right
    means value > threshold, tightening the lower bound.
    """
    bounds: dict[int, list[float]] = {}
    for feature, threshold, went_left in path:
        lo, hi = bounds.setdefault(feature, [-math.inf, math.inf])
        if went_left:
            bounds[feature][1] = min(hi, threshold)
        else:
            bounds[feature][0] = max(lo, threshold)
    return tuple(
        Interval(feature_names[f], lo, hi)
        for f, (lo, hi) in sorted(bounds.items())
    )


def extract_rules(forest: Forest) -> tuple[Rule, ...]:
    """All distinct leaf-path rules of a forest, in discovery order.

    Paths from different trees that collapse to the same conjunction
    are kept once, credited to the first (tree, leaf) that produced
    them.
    """
    seen: dict[tuple[Interval, ...], None] = {}
    rules: list[Rule] = []
    for tree_index, tree in enumerate(forest.trees):
        for leaf_id, path in tree.paths():
            intervals = path_to_intervals(forest.feature_names, path)
            if intervals in seen:
                continue
            seen[intervals] = None
            rules.append(Rule(intervals, (tree_index, leaf_id)))
    return tuple(rules)


def encode(
    rules: tuple[Rule, ...],
    X: np.ndarray,
    feature_names: tuple[str, ...],
) -> np.ndarray:
    """Binary activation matrix: entry [i, j] is 1 when row i obeys rule j."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(feature_names):
        raise DataError("configuration matrix shape does not match the knob list")
    index = {name: i for i, name in enumerate(feature_names)}
    n = X.shape[0]
    V = np.ones((n, len(rules)))
    for j, rule in enumerate(rules):
        mask = np.ones(n, dtype=bool)
        for iv in rule.intervals:
            col = X[:, index[iv.knob]]
            mask &= (col > iv.lo) & (col <= iv.hi)
        V[:, j] = mask
    return V


def _finite_or_none(x: float) -> float | None:
    return None if math.isinf(x) else x


serialize.register(
    "rule",
    Rule,
    lambda r: {
        "intervals": [
            [iv.knob, _finite_or_none(iv.lo), _finite_or_none(iv.hi)]
            for iv in r.intervals
        ],
        "source": list(r.source),
    },
    lambda b: Rule(
        tuple(
            Interval(
                k,
                -math.inf if lo is None else float(lo),
                math.inf if hi is None else float(hi),
            )
            for k, lo, hi in b["intervals"]
        ),
        (int(b["source"][0]), int(b["source"][1])),
    ),
)
