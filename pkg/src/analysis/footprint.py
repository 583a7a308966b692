"""Optimizer footprint: Gower distances between configurations and an MDS embedding."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from src.design_space import Configuration, DesignSpace, HyperparameterKind, encode_many
from src.design_space.encoding import encode_value
from src.run_history import NoMaxBudgetRecordError, RunHistory

logger = logging.getLogger(__name__)


class SpaceMismatchError(ValueError):
    pass


# ─────────────────────────────────────────────────────────────────────────────
# Gower distance
# ─────────────────────────────────────────────────────────────────────────────


def _check_names(space: DesignSpace, config: Configuration) -> None:
    if set(config.values) != set(space.names) or set(config.active) != set(space.names):
        raise SpaceMismatchError(
            f"configuration keys {sorted(config.values)} do not match space {space.names}"
        )


def gower_distance(space: DesignSpace, config_a: Configuration, config_b: Configuration) -> float:
    """
    Mean per-hyperparameter dissimilarity of two configurations.

    Numeric hyperparameters contribute the absolute difference of their unit
    encodings, categorical ones 0 or 1, ordinal ones the rank distance over
    (k - 1). Both inactive counts 0; exactly one inactive counts 1.

    Raises
    ------
    SpaceMismatchError
        If a configuration does not assign exactly the space's hyperparameters.
    """
    _check_names(space, config_a)
    _check_names(space, config_b)
    total = 0.0
    for hp in space.hyperparameters:
        on_a, on_b = config_a.active[hp.name], config_b.active[hp.name]
        if not on_a and not on_b:
            continue
        if on_a != on_b:
            total += 1.0
            continue
        a, b = config_a.values[hp.name], config_b.values[hp.name]
        if hp.kind == HyperparameterKind.CATEGORICAL:
            total += float(a != b)
        elif hp.kind == HyperparameterKind.ORDINAL:
            if hp.n_choices > 1:
                total += abs(hp.index_of(a) - hp.index_of(b)) / (hp.n_choices - 1)
        else:
            total += abs(encode_value(hp, a) - encode_value(hp, b))
    return total / space.dimension


def gower_matrix(space: DesignSpace, configs: list[Configuration]) -> np.ndarray:
    """Pairwise Gower distances, shape (n, n)."""
    for config in configs:
        _check_names(space, config)
    n, d = len(configs), space.dimension
    if n == 0:
        return np.zeros((0, 0))
    vectors, masks = encode_many(space, configs)
    result = np.zeros((n, n))
    for j, hp in enumerate(space.hyperparameters):
        u = vectors[:, j]
        if hp.kind == HyperparameterKind.CATEGORICAL:
            index = np.floor(u * hp.n_choices)
            dissimilarity = (index[:, None] != index[None, :]).astype(float)
        elif hp.kind == HyperparameterKind.ORDINAL:
            k = hp.n_choices
            index = np.floor(u * k)
            dissimilarity = np.abs(index[:, None] - index[None, :]) / max(k - 1, 1)
        else:
            dissimilarity = np.abs(u[:, None] - u[None, :])
        on = masks[:, j]
        both = on[:, None] & on[None, :]
        one = on[:, None] ^ on[None, :]
        result += np.where(both, dissimilarity, 0.0) + one.astype(float)
    return result / d


# ─────────────────────────────────────────────────────────────────────────────
# Multidimensional scaling
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class MdsParams:
    dims: int = 2
    max_iter: int = 300
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dims must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not self.tol >= 0:
            raise ValueError("tol must be non-negative")


@dataclass(frozen=True)
class MdsResult:
    coordinates: np.ndarray  # (n, dims)
    stress: float  # normalised: sqrt(raw stress / sum of squared distances)
    stress_history: tuple[float, ...]  # raw stress per iteration, initial value first
    degenerate: bool
    n_iter: int


def _check_distances(distances) -> np.ndarray:
    D = np.asarray(distances, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if D.shape[0] < 3:
        raise ValueError("need at least 3 points to embed")
    if np.any(~np.isfinite(D)) or np.any(D < 0):
        raise ValueError("distances must be finite and non-negative")
    if not np.allclose(D, D.T, rtol=0.0, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(D) != 0):
        raise ValueError("distance matrix must have a zero diagonal")
    return (D + D.T) / 2.0


def classical_scaling(D: np.ndarray, dims: int) -> np.ndarray:
    """Torgerson scaling from the top eigenvectors of the double-centred squared distances."""
    n = D.shape[0]
    H = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * H @ (D**2) @ H
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:dims]
    scale = np.sqrt(np.clip(evals[order], 0.0, None))
    X = evecs[:, order] * scale
    # eigenvector signs are arbitrary; fix them for reproducible output
    signs = np.sign(X[np.argmax(np.abs(X), axis=0), np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    X = X * signs
    if X.shape[1] < dims:
        X = np.hstack([X, np.zeros((n, dims - X.shape[1]))])
    return X


def _pairwise(X: np.ndarray) -> np.ndarray:
    return squareform(pdist(X))


def raw_stress(X: np.ndarray, D: np.ndarray) -> float:
    return float(np.sum(np.triu(_pairwise(X) - D, k=1) ** 2))


def _guttman(X: np.ndarray, D: np.ndarray) -> np.ndarray:
    # metric SMACOF update with unit weights, as in sklearn.manifold.smacof
    n = X.shape[0]
    dist = _pairwise(X)
    ratio = np.zeros_like(D)
    nonzero = dist > 0
    ratio[nonzero] = D[nonzero] / dist[nonzero]
    B = -ratio
    np.fill_diagonal(B, 0.0)
    np.fill_diagonal(B, -B.sum(axis=1))
    return B @ X / n


def mds_footprint(distances, params: MdsParams | None = None) -> MdsResult:
    """
    Embed a distance matrix with SMACOF stress majorisation.

    Starts from classical scaling and iterates the Guttman transform until the
    relative stress decrease drops below ``tol`` or ``max_iter`` is reached.
    Raw stress never increases from one iteration to the next.

    Raises
    ------
    ValueError
        If the matrix is not square, symmetric, non-negative with a zero
        diagonal, or has fewer than 3 rows.
    """
    params = params or MdsParams()
    D = _check_distances(distances)
    n = D.shape[0]
    scale = float(np.sum(np.triu(D, k=1) ** 2))

    if scale == 0.0:
        logger.warning("All distances are zero; footprint collapses to the origin")
        return MdsResult(np.zeros((n, params.dims)), 0.0, (0.0,), True, 0)

    X = classical_scaling(D, params.dims)
    if np.allclose(X, X[0]):
        rng = np.random.default_rng(params.seed)
        X = X + rng.normal(scale=np.sqrt(scale) / n * 1e-3, size=X.shape)

    stress = raw_stress(X, D)
    history = [stress]
    n_iter = 0
    for n_iter in range(1, params.max_iter + 1):
        if stress <= 1e-15 * scale:
            n_iter -= 1
            break
        X_new = _guttman(X, D)
        new_stress = raw_stress(X_new, D)
        if new_stress > stress:
            # floating-point noise at convergence
            n_iter -= 1
            break
        X = X_new
        history.append(new_stress)
        improvement = stress - new_stress
        stress = new_stress
        if improvement <= params.tol * history[-2]:
            break

    X = X - X.mean(axis=0)
    normalised = math.sqrt(stress / scale)
    logger.debug(f"SMACOF finished after {n_iter} iteration(s), normalised stress {normalised:.3g}")
    return MdsResult(X, normalised, tuple(history), False, n_iter)


# ─────────────────────────────────────────────────────────────────────────────
# Footprint over a history
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class FootprintPoint:
    config_id: int
    x: float
    y: float
    loss: float  # NaN when every evaluation of the configuration failed
    budget: float
    incumbent: bool


@dataclass(frozen=True)
class FootprintEmbedding:
    points: tuple[FootprintPoint, ...]
    stress: float
    degenerate: bool


def footprint_inputs(history: RunHistory) -> list[tuple[int, Configuration, float, float]]:
    """
    One entry per distinct config_id: (config_id, config, loss, budget).

    The loss comes from the highest budget with a successful evaluation
    (averaged over repeats there); configurations that only failed keep their
    highest attempted budget and a NaN loss.
    """
    by_id: dict[int, dict] = {}
    for record in history.records:
        entry = by_id.setdefault(
            record.config_id,
            {"config": record.config, "ok_budget": None, "losses": [], "tried": record.budget},
        )
        entry["tried"] = max(entry["tried"], record.budget)
        if not record.ok:
            continue
        if entry["ok_budget"] is None or record.budget > entry["ok_budget"]:
            entry["ok_budget"] = record.budget
            entry["losses"] = [record.loss]
        elif record.budget == entry["ok_budget"]:
            entry["losses"].append(record.loss)

    rows = []
    for config_id in sorted(by_id):
        entry = by_id[config_id]
        if entry["ok_budget"] is None:
            rows.append((config_id, entry["config"], math.nan, entry["tried"]))
        else:
            loss = float(np.mean(entry["losses"]))
            rows.append((config_id, entry["config"], loss, entry["ok_budget"]))
    return rows


def build_footprint(
    history: RunHistory, space: DesignSpace, params: MdsParams | None = None
) -> FootprintEmbedding:
    """Embed every distinct configuration of the history in two dimensions."""
    rows = footprint_inputs(history)
    try:
        incumbent_id = history.incumbent().config_id
    except NoMaxBudgetRecordError:
        incumbent_id = None

    distances = gower_matrix(space, [config for _, config, _, _ in rows])
    result = mds_footprint(distances, params)
    points = tuple(
        FootprintPoint(
            config_id=config_id,
            x=float(result.coordinates[i, 0]),
            y=float(result.coordinates[i, 1]) if result.coordinates.shape[1] > 1 else 0.0,
            loss=loss,
            budget=budget,
            incumbent=config_id == incumbent_id,
        )
        for i, (config_id, _, loss, budget) in enumerate(rows)
    )
    logger.info(f"Footprint of {len(points)} configuration(s), stress {result.stress:.3g}")
    return FootprintEmbedding(points=points, stress=result.stress, degenerate=result.degenerate)
