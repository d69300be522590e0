"""Interpretable knob estimator: weighted rules over forest paths.

Training runs in three stages.  A random forest is fitted with a
hyperparameter search, every root-to-leaf path becomes a candidate rule,
and an L1-penalized regression picks a sparse weight per rule.  The
model predicts the intercept plus the weights of whichever rules a
configuration satisfies, so every prediction decomposes into a short
list of readable conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from iwek import serialize
from iwek.core import DataError, KnobConfig, KnobSpec, KPDataset, complete_config
from iwek.forest import fit_forest, dataset_matrix
from iwek.lasso import fit_lasso
from iwek.rules import Rule, encode, extract_rules


@dataclass(frozen=True)
class InterpretableEstimator:
    """A fitted rule model: sparse weights, an intercept, and the knob
    universe the rules are defined over.  Weights and intercept are in
    raw label units."""

    rules: tuple[Rule, ...]
    weights: tuple[float, ...]
    intercept: float
    lam: float
    knobs: tuple[KnobSpec, ...]

    def __post_init__(self) -> None:
        if len(self.rules) != len(self.weights):
            raise DataError("one weight per rule required")
        names = {spec.name for spec in self.knobs}
        for rule in self.rules:
            for iv in rule.intervals:
                if iv.knob not in names:
                    raise DataError(f"rule mentions unknown knob {iv.knob!r}")

    @property
    def knob_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.knobs)

    def active_rules(self, x: KnobConfig) -> list[tuple[Rule, float]]:
        values = self._values_for(x)
        return [
            (rule, weight)
            for rule, weight in zip(self.rules, self.weights)
            if rule.satisfied_by(values)
        ]

    def predict(self, x: KnobConfig) -> float:
        # Shares the batch code path so single and batch predictions are
        # bit-identical.
        return float(self.predict_many([x])[0])

    def predict_many(self, configs) -> np.ndarray:
        filled = [self._values_for(x) for x in configs]
        names = self.knob_names
        X = np.asarray([[vals[n] for n in names] for vals in filled], dtype=float)
        V = encode(self.rules, X, names)
        return self.intercept + V @ np.asarray(self.weights)

    def _values_for(self, x: KnobConfig) -> dict[str, float]:
        known = set(self.knob_names)
        for name in x.names:
            if name not in known:
                raise DataError(f"unknown knob {name!r} in configuration")
        return complete_config(x, self.knobs).as_dict()


def fit_ike(
    D: KPDataset,
    budget: int = 30,
    seed: int = 0,
    specs: tuple[KnobSpec, ...] | None = None,
) -> InterpretableEstimator:
    """Train the full estimator on one knob-performance dataset.

    ``specs`` defaults to the knob universe embedded in the dataset.
    Labels are min-max scaled for the penalized fit and the learned
    weights are mapped back to raw label units afterwards.
    """
    if specs is None:
        specs = D.knobs
    if not specs:
        raise DataError("a knob universe is required to fit an estimator")
    forest = fit_forest(D, budget=budget, seed=seed)
    rules = extract_rules(forest)
    X, y, names = dataset_matrix(D)
    V = encode(rules, X, names)
    y_min = float(y.min())
    y_range = float(y.max()) - y_min
    if y_range == 0.0:
        raise DataError("labels are constant; nothing to fit")
    y01 = (y - y_min) / y_range
    fit = fit_lasso(V, y01, seed=seed)
    weights = tuple(float(w) * y_range for w in fit.w)
    intercept = y_min + y_range * fit.b
    return InterpretableEstimator(
        rules=rules,
        weights=weights,
        intercept=float(intercept),
        lam=float(fit.lam),
        knobs=tuple(specs),
    )


def predict(m: InterpretableEstimator, x: KnobConfig) -> float:
    """Predicted performance of one configuration."""
    return m.predict(x)


def explain(m: InterpretableEstimator, x: KnobConfig) -> list[tuple[Rule, float]]:
    """Active rules with nonzero weight, strongest first.

    Ties in absolute weight fall back to the rule's source (tree index,
    leaf id), which is stable across runs.
    """
    active = [(r, w) for r, w in m.active_rules(x) if w != 0.0]
    active.sort(key=lambda item: (-abs(item[1]), item[0].source))
    return active


def explain_payload(m: InterpretableEstimator, x: KnobConfig) -> list[dict]:
    """``explain`` as plain JSON-ready records.

    The CLI and the HTTP service both render explanations from this one
    function, so their outputs agree byte for byte.
    """
    return [
        {
            "rule": rule.describe(),
            "weight": weight,
            "tree": rule.source[0],
            "leaf": rule.source[1],
        }
        for rule, weight in explain(m, x)
    ]


def rule_thresholds(m: InterpretableEstimator, knob: str) -> tuple[float, ...]:
    """Sorted finite interval bounds that any rule places on one knob."""
    bounds = set()
    for rule in m.rules:
        for iv in rule.intervals:
            if iv.knob != knob:
                continue
            for bound in (iv.lo, iv.hi):
                if math.isfinite(bound):
                    bounds.add(float(bound))
    return tuple(sorted(bounds))


def knob_weight_profile(
    m: InterpretableEstimator,
    knob: str,
    grid,
    base: KnobConfig,
) -> tuple[float, ...]:
    """Predictions as one knob sweeps a grid with the rest held at ``base``.

    The curve is piecewise constant; its breakpoints all lie on rule
    interval bounds for the swept knob.
    """
    if knob not in m.knob_names:
        raise DataError(f"unknown knob {knob!r}")
    return tuple(m.predict(base.with_value(knob, float(g))) for g in grid)


serialize.register(
    "interpretable_estimator",
    InterpretableEstimator,
    lambda m: {
        "rules": [serialize.body_of(r) for r in m.rules],
        "weights": list(m.weights),
        "intercept": m.intercept,
        "lam": m.lam,
        "knobs": [serialize.body_of(s) for s in m.knobs],
    },
    lambda b: InterpretableEstimator(
        rules=tuple(serialize.decode_body("rule", r) for r in b["rules"]),
        weights=tuple(float(w) for w in b["weights"]),
        intercept=float(b["intercept"]),
        lam=float(b["lam"]),
        knobs=tuple(serialize.decode_body("knob_spec", s) for s in b["knobs"]),
    ),
)
