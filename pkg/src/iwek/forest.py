"""Random-forest regression over knob configurations.

Trees are induced with scikit-learn and immediately converted to plain
node arrays owned by this package, so fitted forests serialize without
any library state and prediction never re-derives a float.  Bootstrap
sampling, out-of-bag scoring, and the hyperparameter search live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from iwek import serialize
from iwek.core import DataError, KPDataset
from iwek.metrics import r_squared

SUBSAMPLE_MODES = ("sqrt", "all")

# Hyperparameter search space bounds, inclusive.
TREES_RANGE = (10, 200)
DEPTH_RANGE = (2, 10)
MIN_LEAF_RANGE = (1, 10)

MIN_FIT_POINTS = 20


@dataclass(frozen=True)
class ForestParams:
    """Forest hyperparameters: tree count, depth cap, leaf size, and
    per-split feature subsampling mode."""

    trees: int
    depth: int
    min_leaf: int
    subsample: str

    def __post_init__(self) -> None:
        if not TREES_RANGE[0] <= self.trees <= TREES_RANGE[1]:
            raise DataError(f"tree count {self.trees} outside {TREES_RANGE}")
        if not DEPTH_RANGE[0] <= self.depth <= DEPTH_RANGE[1]:
            raise DataError(f"depth {self.depth} outside {DEPTH_RANGE}")
        if not MIN_LEAF_RANGE[0] <= self.min_leaf <= MIN_LEAF_RANGE[1]:
            raise DataError(f"min leaf {self.min_leaf} outside {MIN_LEAF_RANGE}")
        if self.subsample not in SUBSAMPLE_MODES:
            raise DataError(f"unknown subsample mode {self.subsample!r}")


@dataclass(frozen=True, eq=False)
class Tree:
    """One regression tree as parallel node arrays.

    ``feature[i] == -1`` marks a leaf.  Internal nodes route rows with
    ``x[feature] <= threshold`` to ``left`` and the rest to ``right``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        for name in ("feature", "left", "right"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        for name in ("threshold", "value"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("feature", "threshold", "left", "right", "value"):
            getattr(self, name).setflags(write=False)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            pending = np.nonzero(self.feature[node] >= 0)[0]
            if len(pending) == 0:
                break
            at = node[pending]
            go_left = X[pending, self.feature[at]] <= self.threshold[at]
            node[pending] = np.where(go_left, self.left[at], self.right[at])
        return self.value[node]

    def paths(self):
        """Yield (leaf_id, conditions) per leaf in depth-first order.

        Conditions are (feature_index, threshold, went_left) triples from
        the root down.
        """
        stack = [(0, [])]
        while stack:
            node, conditions = stack.pop()
            if self.feature[node] < 0:
                yield int(node), conditions
                continue
            f = int(self.feature[node])
            t = float(self.threshold[node])
            # Right pushed first so the left child is visited first.
            stack.append((int(self.right[node]), conditions + [(f, t, False)]))
            stack.append((int(self.left[node]), conditions + [(f, t, True)]))


@dataclass(frozen=True, eq=False)
class Forest:
    """A fitted forest: trees, feature names, hyperparameters, OOB score."""

    feature_names: tuple[str, ...]
    trees: tuple[Tree, ...]
    params: ForestParams
    oob_r2: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "trees", tuple(self.trees))
        if len(self.trees) < 1:
            raise DataError("forest needs at least one tree")

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def split_thresholds(self, knob: str) -> tuple[float, ...]:
        """Sorted unique split thresholds used for one knob."""
        if knob not in self.feature_names:
            raise DataError(f"unknown knob {knob!r}")
        index = self.feature_names.index(knob)
        values: set[float] = set()
        for tree in self.trees:
            mask = tree.feature == index
            values.update(float(t) for t in tree.threshold[mask])
        return tuple(sorted(values))


def _convert_tree(est: DecisionTreeRegressor) -> Tree:
    t = est.tree_
    feature = np.where(t.children_left >= 0, t.feature, -1)
    return Tree(
        feature=feature,
        threshold=np.where(feature >= 0, t.threshold, 0.0),
        left=t.children_left,
        right=t.children_right,
        value=t.value.reshape(-1),
    )


def fit_forest_with_params(
    X: np.ndarray,
    y: np.ndarray,
    feature_names,
    params: ForestParams,
    seed: int = 0,
) -> Forest:
    """Fit one forest with fixed hyperparameters, scoring it out-of-bag."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(X)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 3]))
    max_features = "sqrt" if params.subsample == "sqrt" else None

    trees = []
    oob_sum = np.zeros(n)
    oob_count = np.zeros(n, dtype=np.int64)
    for _ in range(params.trees):
        sample = rng.integers(0, n, size=n)
        tree_seed = int(rng.integers(0, 2**31 - 1))
        est = DecisionTreeRegressor(
            max_depth=params.depth,
            min_samples_leaf=params.min_leaf,
            max_features=max_features,
            random_state=tree_seed,
        )
        est.fit(X[sample], y[sample])
        tree = _convert_tree(est)
        trees.append(tree)
        oob_mask = np.ones(n, dtype=bool)
        oob_mask[sample] = False
        if oob_mask.any():
            rows = np.nonzero(oob_mask)[0]
            oob_sum[rows] += tree.predict(X[rows])
            oob_count[rows] += 1

    covered = oob_count > 0
    if covered.sum() >= 2:
        try:
            oob = r_squared(y[covered], oob_sum[covered] / oob_count[covered])
        except DataError:
            oob = float("-inf")
    else:
        oob = float("-inf")
    return Forest(
        feature_names=tuple(feature_names), trees=tuple(trees), params=params,
        oob_r2=oob,
    )


def dataset_matrix(D: KPDataset) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Dense numeric view of a dataset; columns follow knob-name order."""
    names = D.knob_names
    X = np.asarray([config.values for config in D.X], dtype=float)
    y = np.asarray(D.y, dtype=float)
    return X, y, names


def _random_params(rng: np.random.Generator) -> ForestParams:
    return ForestParams(
        trees=int(rng.integers(TREES_RANGE[0], TREES_RANGE[1] + 1)),
        depth=int(rng.integers(DEPTH_RANGE[0], DEPTH_RANGE[1] + 1)),
        min_leaf=int(rng.integers(MIN_LEAF_RANGE[0], MIN_LEAF_RANGE[1] + 1)),
        subsample=SUBSAMPLE_MODES[int(rng.integers(0, 2))],
    )


def _perturbed_params(base: ForestParams, rng: np.random.Generator) -> ForestParams:
    dim = int(rng.integers(0, 4))
    trees, depth, min_leaf, subsample = (
        base.trees, base.depth, base.min_leaf, base.subsample,
    )
    if dim == 0:
        factor = float(rng.choice(np.array([0.5, 0.75, 1.5, 2.0])))
        trees = int(np.clip(round(base.trees * factor), *TREES_RANGE))
    elif dim == 1:
        depth = int(np.clip(base.depth + int(rng.choice(np.array([-2, -1, 1, 2]))), *DEPTH_RANGE))
    elif dim == 2:
        min_leaf = int(np.clip(base.min_leaf + int(rng.choice(np.array([-2, -1, 1, 2]))), *MIN_LEAF_RANGE))
    else:
        subsample = "all" if base.subsample == "sqrt" else "sqrt"
    return ForestParams(trees, depth, min_leaf, subsample)


def fit_forest(D: KPDataset, budget: int = 30, seed: int = 0) -> Forest:
    """Fit a forest, tuning hyperparameters by sequential search.

    The first ten trials are random draws from the search space; later
    trials greedily perturb the incumbent.  Every trial is scored by
    out-of-bag R-squared and the best forest is returned.
    """
    if budget < 1:
        raise DataError("search budget must be >= 1")
    if len(D) < MIN_FIT_POINTS:
        raise DataError(f"forest fitting needs at least {MIN_FIT_POINTS} points")
    X, y, names = dataset_matrix(D)
    if float(y.min()) == float(y.max()):
        raise DataError("labels are constant; nothing to fit")

    search_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    trial_seeds = [int(s) for s in search_rng.integers(0, 2**31 - 1, size=budget)]

    best: Forest | None = None
    best_params: ForestParams | None = None
    for trial in range(budget):
        if trial < 10 or best_params is None:
            params = _random_params(search_rng)
        else:
            params = _perturbed_params(best_params, search_rng)
        candidate = fit_forest_with_params(X, y, names, params, seed=trial_seeds[trial])
        if best is None or candidate.oob_r2 > best.oob_r2:
            best = candidate
            best_params = params
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Serialization.

serialize.register(
    "tree",
    Tree,
    lambda t: {
        "feature": [int(v) for v in t.feature],
        "threshold": [float(v) for v in t.threshold],
        "left": [int(v) for v in t.left],
        "right": [int(v) for v in t.right],
        "value": [float(v) for v in t.value],
    },
    lambda b: Tree(
        feature=b["feature"],
        threshold=b["threshold"],
        left=b["left"],
        right=b["right"],
        value=b["value"],
    ),
)

serialize.register(
    "forest_params",
    ForestParams,
    lambda p: {
        "trees": p.trees,
        "depth": p.depth,
        "min_leaf": p.min_leaf,
        "subsample": p.subsample,
    },
    lambda b: ForestParams(
        trees=b["trees"],
        depth=b["depth"],
        min_leaf=b["min_leaf"],
        subsample=b["subsample"],
    ),
)

serialize.register(
    "forest",
    Forest,
    lambda f: {
        "feature_names": list(f.feature_names),
        "trees": [serialize.body_of(t) for t in f.trees],
        "params": serialize.body_of(f.params),
        # -inf marks an unscorable fit; JSON has no literal for it.
        "oob_r2": f.oob_r2 if np.isfinite(f.oob_r2) else None,
    },
    lambda b: Forest(
        feature_names=tuple(b["feature_names"]),
        trees=tuple(serialize.decode_body("tree", t) for t in b["trees"]),
        params=serialize.decode_body("forest_params", b["params"]),
        oob_r2=float("-inf") if b["oob_r2"] is None else b["oob_r2"],
    ),
)
