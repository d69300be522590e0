"""Knob importance ranking by ensemble permutation scoring.

Each model in a small ensemble is fitted on the dataset and scored with
R² on its own training data.  Shuffling one knob's column breaks that
knob's relationship to the labels; the drop in R², averaged over a few
shuffles and weighted by how much the model learned in the first place,
accumulates into the knob's importance score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.ensemble import RandomForestRegressor
from sklearn.linear_model import Ridge
from sklearn.tree import DecisionTreeRegressor

from iwek.core import DataError, KnobRanking, KPDataset
from iwek.forest import dataset_matrix
from iwek.metrics import r_squared

MODEL_KINDS = ("ridge-linear", "decision-tree", "random-forest")

SHUFFLE_REPEATS = 5


@dataclass
class RegressorHandle:
    """One ensemble member: a model kind, its fitted state, and the
    training R² recorded at fit time."""

    kind: str
    seed: int = 0
    train_r2: float | None = None
    _model: object = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise DataError(f"unknown model kind {self.kind!r}")

    @property
    def fitted(self) -> bool:
        return self._model is not None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RegressorHandle":
        if self.kind == "ridge-linear":
            model = Ridge(alpha=1.0)
        elif self.kind == "decision-tree":
            model = DecisionTreeRegressor(max_depth=6, random_state=self.seed)
        else:
            model = RandomForestRegressor(
                n_estimators=100, random_state=self.seed, n_jobs=1
            )
        model.fit(X, y)
        self._model = model
        self.train_r2 = r_squared(y, model.predict(X))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self._model is None:
            raise DataError("model is not fitted")
        return np.asarray(self._model.predict(X), dtype=float)


def default_ensemble(seed: int = 0) -> tuple[RegressorHandle, ...]:
    """The standard three-member ensemble."""
    return tuple(RegressorHandle(kind, seed=seed) for kind in MODEL_KINDS)


def rank_knobs(
    models: Sequence[RegressorHandle],
    D: KPDataset,
    knob_names: Sequence[str] | None = None,
    seed: int = 0,
    repeats: int = SHUFFLE_REPEATS,
) -> KnobRanking:
    """Score every candidate knob by ensemble permutation importance.

    For each model with training R² s and each knob, the knob's column
    is shuffled ``repeats`` times; with s' the mean shuffled R², the
    knob accumulates (s - s') * max(s, 0).  A model that fits no better
    than the label mean (s <= 0) contributes nothing.
    """
    if len(D) < 10:
        raise DataError("ranking needs at least 10 samples")
    X, y, names = dataset_matrix(D)
    if float(y.min()) == float(y.max()):
        raise DataError("labels are constant; importance is undefined")
    if knob_names is None:
        knob_names = names
    column = {name: i for i, name in enumerate(names)}
    for name in knob_names:
        if name not in column:
            raise DataError(f"unknown knob {name!r}")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 11]))
    scores = {name: 0.0 for name in knob_names}
    n = len(y)
    for model in models:
        if not model.fitted:
            model.fit(X, y)
        s = r_squared(y, model.predict(X))
        weight = max(s, 0.0)
        for name in knob_names:
            j = column[name]
            shuffled_total = 0.0
            for _ in range(repeats):
                X_shuffled = X.copy()
                X_shuffled[:, j] = X[rng.permutation(n), j]
                shuffled_total += r_squared(y, model.predict(X_shuffled))
            s_prime = shuffled_total / repeats
            scores[name] += (s - s_prime) * weight
    return KnobRanking(tuple(scores.items()))


def top_k(ranking: KnobRanking, k: int) -> tuple[str, ...]:
    """First k knob names by descending score, ties lexicographic."""
    if k < 0:
        raise DataError("k must be >= 0")
    if k > len(ranking.weights):
        raise DataError(f"k={k} exceeds the {len(ranking.weights)} ranked knobs")
    return ranking.names[:k]
