"""Random-forest surrogate over the unit-cube encoding.

Each fitted tree is flattened into its leaf boxes so marginals can be
integrated exactly. A leaf box is half-open, ``(lower, upper]`` per
dimension, except that a lower bound of 0 is inclusive.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from src.design_space import DesignSpace, encode_many
from src.run_history import TrialRecord

logger = logging.getLogger(__name__)


class NotEnoughDataError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    """Forest construction settings; exposed as ``report`` options."""

    n_trees: int = 32
    max_depth: int = 64
    min_leaf: int = 3
    bootstrap: bool = True
    # fraction of the d features considered at each split, rounded up
    feature_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be positive")
        if not 0 < self.feature_fraction <= 1:
            raise ValueError("feature_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class TreeBoxes:
    lower: np.ndarray  # (L, d)
    upper: np.ndarray  # (L, d)
    means: np.ndarray  # (L,)
    counts: np.ndarray  # (L,)

    @property
    def n_leaves(self) -> int:
        return self.means.shape[0]

    @property
    def dimension(self) -> int:
        return self.lower.shape[1]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.upper - self.lower, axis=1)

    @property
    def grand_mean(self) -> float:
        return float(np.dot(self.means, self.volumes))

    @property
    def total_variance(self) -> float:
        """Variance of the tree prediction under the uniform measure on [0, 1]^d."""
        return float(np.dot(self.volumes, (self.means - self.grand_mean) ** 2))


@dataclass(frozen=True)
class ForestSurrogate:
    trees: tuple[TreeBoxes, ...]
    model: RandomForestRegressor
    dimension: int
    n_obs: int
    budget: float | None = None

    def predict(self, vectors) -> np.ndarray:
        """Forest-mean prediction at unit-cube points."""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        return self.model.predict(vectors)


def min_records(d: int) -> int:
    return max(10, d + 2)


def as_split_precision(values) -> np.ndarray:
    """Round query values the way the trees compare them against thresholds."""
    return np.asarray(values, dtype=float).astype(np.float32).astype(np.float64)


def _extract_boxes(estimator, d: int) -> TreeBoxes:
    tree = estimator.tree_
    lower_rows, upper_rows, means, counts = [], [], [], []
    stack = [(0, np.zeros(d), np.ones(d))]
    while stack:
        node, lo, hi = stack.pop()
        left, right = tree.children_left[node], tree.children_right[node]
        if left == right:  # leaf
            lower_rows.append(lo)
            upper_rows.append(hi)
            means.append(float(tree.value[node].ravel()[0]))
            counts.append(int(tree.n_node_samples[node]))
            continue
        j = tree.feature[node]
        thr = min(max(float(tree.threshold[node]), lo[j]), hi[j])
        left_hi = hi.copy()
        left_hi[j] = thr
        right_lo = lo.copy()
        right_lo[j] = thr
        stack.append((right, right_lo, hi))
        stack.append((left, lo, left_hi))
    return TreeBoxes(
        lower=np.vstack(lower_rows),
        upper=np.vstack(upper_rows),
        means=np.array(means),
        counts=np.array(counts),
    )


def fit_forest_arrays(
    vectors, losses, params: ForestParams | None = None, budget: float | None = None
) -> ForestSurrogate:
    """
    Fit the forest on already encoded points.

    Raises
    ------
    NotEnoughDataError
        If there are fewer than max(10, d + 2) points.
    """
    params = params or ForestParams()
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    y = np.asarray(losses, dtype=float)
    n, d = X.shape
    if n < min_records(d):
        raise NotEnoughDataError(f"{n} record(s), need at least {min_records(d)} for d={d}")
    if y.shape[0] != n:
        raise ValueError("vectors and losses must have the same length")
    if not np.all(np.isfinite(y)):
        raise ValueError("losses must be finite")

    model = RandomForestRegressor(
        n_estimators=params.n_trees,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_leaf,
        max_features=max(1, math.ceil(params.feature_fraction * d - 1e-9)),
        bootstrap=params.bootstrap,
        random_state=params.seed,
    )
    model.fit(X, y)
    trees = tuple(_extract_boxes(est, d) for est in model.estimators_)
    logger.debug(
        f"Fitted forest of {params.n_trees} trees on {n} points "
        f"(mean leaves per tree: {np.mean([t.n_leaves for t in trees]):.1f})"
    )
    return ForestSurrogate(trees=trees, model=model, dimension=d, n_obs=n, budget=budget)


def fit_forest(
    records: list[TrialRecord],
    space: DesignSpace,
    params: ForestParams | None = None,
    budget: float | None = None,
) -> ForestSurrogate:
    """
    Fit a regression forest on the successful records.

    Inactive hyperparameters are imputed with their default's encoding.

    Parameters
    ----------
    records : list of TrialRecord
        Observations; failed records are ignored.
    space : DesignSpace
        Space used to encode the configurations.
    params : ForestParams, optional
        Forest settings; defaults to ``ForestParams()``.
    budget : float, optional
        Budget the records were evaluated on, kept for reporting.

    Raises
    ------
    NotEnoughDataError
        If fewer than max(10, d + 2) successful records are given.
    """
    ok = [r for r in records if r.ok]
    if len(ok) < min_records(space.dimension):
        raise NotEnoughDataError(
            f"{len(ok)} successful record(s), need at least {min_records(space.dimension)}"
        )
    vectors, _ = encode_many(space, [r.config for r in ok])
    losses = np.array([r.loss for r in ok], dtype=float)
    return fit_forest_arrays(vectors, losses, params, budget)
