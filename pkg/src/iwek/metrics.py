"""Prediction-quality metrics over knob-performance labels.

Squared-error metrics are computed on labels rescaled by the true
labels' min-max range, so scores are comparable across scenarios whose
raw throughputs live on different scales.
"""

from __future__ import annotations

import numpy as np

from iwek.core import DataError


def _pair_of_arrays(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y_true, dtype=float)
    b = np.asarray(y_pred, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise DataError("metric inputs must be equal-length 1-D vectors")
    if len(a) == 0:
        raise DataError("metric inputs must be non-empty")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise DataError("metric inputs must be finite")
    return a, b


def r_squared(y_true, y_pred) -> float:
    """Coefficient of determination: 1 - SS_res / SS_tot.

    Raises on constant ``y_true``, where the score is undefined.
    """
    y, y_hat = _pair_of_arrays(y_true, y_pred)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DataError("r_squared is undefined for constant labels")
    ss_res = float(((y - y_hat) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def mean_prediction_error(y_true, y_pred) -> float:
    """Mean squared error after min-max rescaling by the true label range."""
    y, y_hat = _pair_of_arrays(y_true, y_pred)
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        raise DataError("mean_prediction_error is undefined for constant labels")
    span = hi - lo
    return float((((y - lo) / span - (y_hat - lo) / span) ** 2).mean())


def pearson(y_true, y_pred) -> float:
    """Pearson correlation between labels and predictions, in [-1, 1]."""
    y, y_hat = _pair_of_arrays(y_true, y_pred)
    ya = y - y.mean()
    pa = y_hat - y_hat.mean()
    denom = float(np.sqrt((ya * ya).sum() * (pa * pa).sum()))
    if denom == 0.0:
        raise DataError("pearson is undefined when either vector is constant")
    value = float((ya * pa).sum() / denom)
    return max(-1.0, min(1.0, value))


def pearson_error(y_true, y_pred) -> float:
    """Correlation loss: 1 - pearson, in [0, 2]."""
    return 1.0 - pearson(y_true, y_pred)


def pair_accuracy(y_true, y_pred, n_pairs: int = 100, seed: int = 0) -> float:
    """Fraction of sampled label pairs whose predicted order is correct.

    Pairs are drawn without replacement from index pairs with unequal
    true labels; when fewer exist than requested, all are used.  A tied
    prediction on an unequal pair counts as incorrect.
    """
    y, y_hat = _pair_of_arrays(y_true, y_pred)
    if n_pairs < 1:
        raise DataError("n_pairs must be >= 1")
    n = len(y)
    candidates = [
        (i, j) for i in range(n) for j in range(i + 1, n) if y[i] != y[j]
    ]
    if not candidates:
        raise DataError("pair_accuracy needs at least one pair of unequal labels")
    if len(candidates) > n_pairs:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 23]))
        chosen = rng.choice(len(candidates), size=n_pairs, replace=False)
        pairs = [candidates[int(c)] for c in chosen]
    else:
        pairs = candidates
    correct = 0
    for i, j in pairs:
        if y_hat[i] == y_hat[j]:
            continue  # ties carry no usable order
        if (y[i] > y[j]) == (y_hat[i] > y_hat[j]):
            correct += 1
    return correct / len(pairs)
