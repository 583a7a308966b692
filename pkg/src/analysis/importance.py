"""Exact functional-ANOVA importance and local parameter importance on a forest.

Tree marginals are integrated over leaf boxes; along one dimension a marginal
is piecewise constant between the split points, so variances are exact sums
over those segments.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from src.analysis.forest import ForestSurrogate, TreeBoxes, as_split_precision
from src.design_space import Configuration, DesignSpace, check_validity, to_unit_vector
from src.design_space.encoding import decode_value

logger = logging.getLogger(__name__)

LPI_GRID_SIZE = 20


class DimensionOutOfRangeError(ValueError):
    pass


class InvalidIncumbentError(ValueError):
    pass


@dataclass(frozen=True)
class ImportanceEstimate:
    """Variance fraction averaged over trees, with its across-tree spread."""

    mean: float
    std: float
    degenerate: bool = False


# ─────────────────────────────────────────────────────────────────────────────
# Tree marginals
# ─────────────────────────────────────────────────────────────────────────────


def _inside(tree: TreeBoxes, subset: list[int], points: np.ndarray) -> np.ndarray:
    """(m, L) membership of points (m, |U|) in the leaf boxes projected on ``subset``."""
    lo = tree.lower[:, subset][None, :, :]
    hi = tree.upper[:, subset][None, :, :]
    q = points[:, None, :]
    return (((q > lo) | (lo <= 0.0)) & (q <= hi)).all(axis=2)


def _other_volume(tree: TreeBoxes, subset: list[int]) -> np.ndarray:
    others = [k for k in range(tree.dimension) if k not in subset]
    if not others:
        return np.ones(tree.n_leaves)
    return np.prod(tree.upper[:, others] - tree.lower[:, others], axis=1)


def _check_subset(tree: TreeBoxes, subset) -> list[int]:
    subset = [int(j) for j in subset]
    if not subset:
        raise DimensionOutOfRangeError("subset must not be empty")
    if len(set(subset)) != len(subset):
        raise DimensionOutOfRangeError(f"subset {subset} repeats a dimension")
    bad = [j for j in subset if not 0 <= j < tree.dimension]
    if bad:
        raise DimensionOutOfRangeError(f"dimension(s) {bad} outside 0..{tree.dimension - 1}")
    return subset


def tree_marginal(tree: TreeBoxes, subset, query):
    """
    Marginal prediction of one tree on the dimensions in ``subset``.

    The remaining dimensions are integrated out under the uniform measure:
    each leaf mean is weighted by the volume fraction of its box along the
    dimensions outside ``subset``.

    Parameters
    ----------
    tree : TreeBoxes
        A flattened tree.
    subset : sequence of int
        Non-empty set of dimensions U.
    query : array-like
        Values on U, shape (|U|,) or (m, |U|), each in [0, 1].

    Returns
    -------
    float or numpy.ndarray
        Scalar for a single query, otherwise shape (m,).

    Raises
    ------
    DimensionOutOfRangeError
        If U is empty or names a missing dimension, or a query value lies
        outside [0, 1].
    """
    subset = _check_subset(tree, subset)
    raw = np.asarray(query, dtype=float)
    single = raw.ndim <= 1
    points = np.atleast_2d(raw)
    if points.shape[1] != len(subset):
        raise DimensionOutOfRangeError(
            f"query has {points.shape[1]} component(s), subset has {len(subset)}"
        )
    if np.any(~np.isfinite(points)) or np.any(points < 0.0) or np.any(points > 1.0):
        raise DimensionOutOfRangeError("query values must lie in [0, 1]")

    points = as_split_precision(points)
    weighted = tree.means * _other_volume(tree, subset)
    values = _inside(tree, subset, points) @ weighted
    return float(values[0]) if single else values


# ─────────────────────────────────────────────────────────────────────────────
# Variance decomposition
# ─────────────────────────────────────────────────────────────────────────────


def _segments(tree: TreeBoxes, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and widths of the intervals between split points along ``j``."""
    edges = np.unique(np.concatenate([[0.0, 1.0], tree.lower[:, j], tree.upper[:, j]]))
    widths = np.diff(edges)
    keep = widths > 0
    return ((edges[:-1] + edges[1:]) / 2.0)[keep], widths[keep]


def _segment_membership(tree: TreeBoxes, j: int) -> tuple[np.ndarray, np.ndarray]:
    mids, widths = _segments(tree, j)
    return _inside(tree, [j], mids[:, None]).astype(float), widths


def singleton_variances(tree: TreeBoxes) -> np.ndarray:
    """V_j for every dimension j of one tree."""
    f0 = tree.grand_mean
    out = np.zeros(tree.dimension)
    for j in range(tree.dimension):
        member, widths = _segment_membership(tree, j)
        marginal = member @ (tree.means * _other_volume(tree, [j]))
        out[j] = np.dot(widths, (marginal - f0) ** 2)
    return out


def pair_variance(tree: TreeBoxes, j: int, k: int, v_j: float, v_k: float) -> float:
    """Interaction component V_jk, i.e. the pair marginal variance minus V_j and V_k."""
    f0 = tree.grand_mean
    member_j, widths_j = _segment_membership(tree, j)
    member_k, widths_k = _segment_membership(tree, k)
    weighted = tree.means * _other_volume(tree, [j, k])
    marginal = (member_j * weighted) @ member_k.T
    total = float(widths_j @ ((marginal - f0) ** 2) @ widths_k)
    return max(total - v_j - v_k, 0.0)


def _estimate(per_tree: np.ndarray, degenerate: bool) -> ImportanceEstimate:
    return ImportanceEstimate(
        mean=float(np.mean(per_tree)), std=float(np.std(per_tree)), degenerate=degenerate
    )


@dataclass(frozen=True)
class FanovaResult:
    """Per-tree variance fractions of one forest."""

    singles: np.ndarray  # (n_trees, d)
    total_variance: np.ndarray  # (n_trees,)
    pairs: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.total_variance <= 0.0))

    def single(self, j: int) -> ImportanceEstimate:
        return _estimate(self.singles[:, j], self.degenerate)

    def pair(self, j: int, k: int) -> ImportanceEstimate:
        return _estimate(self.pairs[(min(j, k), max(j, k))], self.degenerate)


def _fractions(variances: np.ndarray, total: float) -> np.ndarray:
    if total <= 0.0:
        return np.zeros_like(variances)
    return variances / total


def decompose(forest: ForestSurrogate, interactions: bool = False) -> FanovaResult:
    """
    Singleton (and optionally pairwise) variance fractions for every tree.

    A tree whose prediction is constant contributes fractions of 0.
    """
    d = forest.dimension
    singles = np.zeros((len(forest.trees), d))
    totals = np.zeros(len(forest.trees))
    pairs = {}
    if interactions:
        pairs = {jk: np.zeros(len(forest.trees)) for jk in combinations(range(d), 2)}

    for t, tree in enumerate(forest.trees):
        total = tree.total_variance
        totals[t] = total
        v = singleton_variances(tree)
        singles[t] = _fractions(v, total)
        for j, k in pairs:
            if total > 0.0:
                pairs[(j, k)][t] = pair_variance(tree, j, k, v[j], v[k]) / total

    result = FanovaResult(singles=singles, total_variance=totals, pairs=pairs)
    if result.degenerate:
        logger.warning("Forest prediction is constant; importance fractions are all 0")
    return result


def fanova_importance(forest: ForestSurrogate, subset) -> ImportanceEstimate:
    """
    Variance fraction of a singleton or a pair of dimensions.

    For a pair the fraction is of the interaction component only.

    Raises
    ------
    DimensionOutOfRangeError
        If ``subset`` is empty, has more than two entries or names a missing dimension.
    """
    subset = _check_subset(forest.trees[0], subset)
    if len(subset) > 2:
        raise DimensionOutOfRangeError("only singletons and pairs are supported")

    per_tree = np.zeros(len(forest.trees))
    totals = np.zeros(len(forest.trees))
    for t, tree in enumerate(forest.trees):
        totals[t] = tree.total_variance
        v = singleton_variances(tree)
        if len(subset) == 1:
            component = v[subset[0]]
        else:
            j, k = subset
            component = pair_variance(tree, j, k, v[j], v[k])
        per_tree[t] = component / totals[t] if totals[t] > 0 else 0.0
    return _estimate(per_tree, bool(np.all(totals <= 0.0)))


# ─────────────────────────────────────────────────────────────────────────────
# Local parameter importance
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LpiCurve:
    name: str
    grid: np.ndarray  # unit-cube coordinates along the hyperparameter
    values: list  # the same points as native values
    predictions: np.ndarray
    variance: float
    active: bool


def lpi_grid(space: DesignSpace, name: str) -> np.ndarray:
    hp = space[name]
    if hp.is_numeric:
        return np.linspace(0.0, 1.0, LPI_GRID_SIZE)
    k = hp.n_choices
    return (np.arange(k) + 0.5) / k


def lpi_curves(
    forest: ForestSurrogate, space: DesignSpace, incumbent: Configuration
) -> dict[str, LpiCurve]:
    """
    Forest-mean predictions along each hyperparameter around the incumbent.

    Raises
    ------
    InvalidIncumbentError
        If the incumbent is not a valid configuration of ``space`` or the
        forest was fitted on another dimension.
    """
    if forest.dimension != space.dimension:
        raise InvalidIncumbentError(
            f"forest has {forest.dimension} dimension(s), space has {space.dimension}"
        )
    violations = check_validity(space, incumbent)
    if violations:
        raise InvalidIncumbentError("; ".join(str(v) for v in violations))

    center, mask = to_unit_vector(space, incumbent)
    curves = {}
    for j, hp in enumerate(space.hyperparameters):
        grid = lpi_grid(space, hp.name)
        if not mask[j]:
            curves[hp.name] = LpiCurve(hp.name, grid, [], np.array([]), 0.0, False)
            continue
        points = np.tile(center, (len(grid), 1))
        points[:, j] = grid
        predictions = forest.predict(points)
        curves[hp.name] = LpiCurve(
            name=hp.name,
            grid=grid,
            values=[decode_value(hp, float(u)) for u in grid],
            predictions=predictions,
            variance=float(np.var(predictions)),
            active=True,
        )
    return curves


def lpi_fractions(curves: dict[str, LpiCurve]) -> dict[str, float]:
    total = sum(c.variance for c in curves.values())
    if total <= 0.0:
        return {name: 0.0 for name in curves}
    return {name: c.variance / total for name, c in curves.items()}


def lpi(forest: ForestSurrogate, space: DesignSpace, incumbent: Configuration, name: str) -> float:
    """
    Local importance of ``name``: its share of the prediction variance when
    only that hyperparameter moves away from the incumbent.

    Inactive hyperparameters at the incumbent get 0.
    """
    if name not in space.names:
        raise KeyError(name)
    return lpi_fractions(lpi_curves(forest, space, incumbent))[name]
