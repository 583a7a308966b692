"""Good/bad kernel density estimators and the density-ratio acquisition.

Observations are unit-cube encodings (see ``src.design_space.encoding``).
Numeric dimensions use Gaussian kernels truncated and renormalised on [0, 1];
choice dimensions use Aitchison-Aitken kernels over the category index.
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, truncnorm

from src.design_space import DesignSpace

logger = logging.getLogger(__name__)

MIN_BANDWIDTH = 1e-3
# Floor for g(x) when forming l(x) / g(x)
_DENSITY_FLOOR = 1e-300


class NotEnoughObservationsError(ValueError):
    pass


class EmptyPointSetError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class ModelNotFittedError(RuntimeError):
    pass


class KernelKind(enum.Enum):
    TRUNCATED_GAUSSIAN = "gaussian-truncated"
    AITCHISON_AITKEN = "aitchison-aitken"


@dataclass(frozen=True)
class Kde:
    points: np.ndarray  # (n, d)
    bandwidths: np.ndarray  # (d,)
    kernel_kinds: tuple[KernelKind, ...]
    category_counts: tuple[int, ...]  # 0 for numeric dimensions

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class KdeBudgetModel:
    budget: float
    good: Kde | None
    bad: Kde | None
    n_obs: int


@dataclass(frozen=True)
class GoodBadSplit:
    good_indices: np.ndarray
    bad_indices: np.ndarray


# ─────────────────────────────────────────────────────────────────────────────
# Splitting and budget selection
# ─────────────────────────────────────────────────────────────────────────────


def min_points(d: int) -> int:
    """N_min = d + 1."""
    return d + 1


def split_good_bad(losses, gamma: float, d: int, config_ids=None) -> GoodBadSplit:
    """
    Split observations into the low-loss and the remaining set.

    Parameters
    ----------
    losses : array-like
        Loss per observation, in submission order.
    gamma : float
        Fraction of observations that go to the good set, in (0, 1).
    d : int
        Dimension of the space; sets N_min = d + 1.
    config_ids : array-like, optional
        Used to break loss ties (smaller id first). Defaults to input order.

    Returns
    -------
    GoodBadSplit
        Index arrays into ``losses``; good has max(N_min, ceil(gamma * n))
        entries, capped so that bad keeps at least N_min.

    Raises
    ------
    NotEnoughObservationsError
        If n < 2 * N_min.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    losses = np.asarray(losses, dtype=float)
    n = losses.shape[0]
    if n == 0:
        raise NotEnoughObservationsError("no observations")
    n_min = min_points(d)
    if n < 2 * n_min:
        raise NotEnoughObservationsError(f"{n} observation(s), need at least {2 * n_min}")

    ids = np.arange(n) if config_ids is None else np.asarray(config_ids)
    order = np.lexsort((ids, losses))
    # Guard against gamma * n landing a hair above an integer
    n_good = max(n_min, math.ceil(gamma * n - 1e-9))
    n_good = min(n_good, n - n_min)
    return GoodBadSplit(good_indices=order[:n_good], bad_indices=order[n_good:])


def select_model_budget(per_budget_counts: dict[float, int], d: int) -> float | None:
    """Largest budget with at least d + 3 observations, or None on cold start."""
    needed = min_points(d) + 2
    qualifying = [b for b, count in per_budget_counts.items() if count >= needed]
    return max(qualifying) if qualifying else None


# ─────────────────────────────────────────────────────────────────────────────
# Fitting and evaluation
# ─────────────────────────────────────────────────────────────────────────────


def fit_kde(points, space: DesignSpace) -> Kde:
    """
    Fit a product-kernel KDE on unit-cube points.

    Bandwidths follow Scott's rule h_j = n^(-1/(d+4)) * std_j, floored at 1e-3;
    Aitchison-Aitken bandwidths are additionally kept below 1.

    Raises
    ------
    EmptyPointSetError
        If ``points`` is empty.
    DimensionMismatchError
        If the points do not have ``d`` columns.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise EmptyPointSetError("cannot fit a KDE on zero points")
    n, d = points.shape
    if d != space.dimension:
        raise DimensionMismatchError(f"points have {d} columns, space has {space.dimension}")

    std = points.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    bandwidths = np.maximum(n ** (-1.0 / (d + 4)) * std, MIN_BANDWIDTH)

    kinds = []
    counts = []
    for j, hp in enumerate(space.hyperparameters):
        if hp.is_numeric:
            kinds.append(KernelKind.TRUNCATED_GAUSSIAN)
            counts.append(0)
        else:
            kinds.append(KernelKind.AITCHISON_AITKEN)
            counts.append(hp.n_choices)
            bandwidths[j] = min(bandwidths[j], 1.0 - MIN_BANDWIDTH)

    return Kde(
        points=points,
        bandwidths=bandwidths,
        kernel_kinds=tuple(kinds),
        category_counts=tuple(counts),
    )


def _category_index(u: np.ndarray, k: int) -> np.ndarray:
    return np.minimum(np.floor(u * k).astype(int), k - 1)


def _kernel_matrix(kde: Kde, queries: np.ndarray) -> np.ndarray:
    """Product-kernel values, shape (m, n)."""
    m = queries.shape[0]
    n = kde.points.shape[0]
    out = np.ones((m, n))
    for j, kind in enumerate(kde.kernel_kinds):
        h = kde.bandwidths[j]
        x = queries[:, j][:, None]
        p = kde.points[:, j][None, :]
        if kind == KernelKind.TRUNCATED_GAUSSIAN:
            mass = norm.cdf((1.0 - p) / h) - norm.cdf(-p / h)
            out *= norm.pdf((x - p) / h) / (h * mass)
        else:
            k = kde.category_counts[j]
            if k == 1:
                continue
            same = _category_index(x, k) == _category_index(p, k)
            out *= np.where(same, 1.0 - h, h / (k - 1))
    return out


def density_many(kde: Kde, queries) -> np.ndarray:
    """Densities at each row of ``queries``."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != kde.dimension:
        raise DimensionMismatchError(
            f"query has {queries.shape[1]} components, KDE has {kde.dimension}"
        )
    return _kernel_matrix(kde, queries).mean(axis=1)


def density(kde: Kde, unit_vector) -> float:
    """Density of the KDE at one point of the unit cube."""
    vector = np.asarray(unit_vector, dtype=float)
    if vector.ndim != 1:
        raise DimensionMismatchError("expected a single vector")
    return float(density_many(kde, vector[None, :])[0])


# ─────────────────────────────────────────────────────────────────────────────
# Model and acquisition
# ─────────────────────────────────────────────────────────────────────────────


def fit_budget_model(
    vectors,
    losses,
    space: DesignSpace,
    budget: float,
    gamma: float = 0.15,
    config_ids=None,
) -> KdeBudgetModel:
    """Split observations at one budget and fit the good and bad KDEs."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    split = split_good_bad(losses, gamma, space.dimension, config_ids)
    good = fit_kde(vectors[split.good_indices], space)
    bad = fit_kde(vectors[split.bad_indices], space)
    logger.debug(
        f"Fitted KDE model at budget {budget}: {len(split.good_indices)} good, "
        f"{len(split.bad_indices)} bad"
    )
    return KdeBudgetModel(budget=budget, good=good, bad=bad, n_obs=len(vectors))


def sample_from_kde(
    kde: Kde, rng: np.random.Generator, n_samples: int, bandwidth_factor: float = 1.0
) -> np.ndarray:
    """Draw ``n_samples`` points from the KDE with widened bandwidths."""
    n = kde.points.shape[0]
    centers = kde.points[rng.integers(n, size=n_samples)]
    samples = np.empty((n_samples, kde.dimension))
    for j, kind in enumerate(kde.kernel_kinds):
        mu = centers[:, j]
        if kind == KernelKind.TRUNCATED_GAUSSIAN:
            h = kde.bandwidths[j] * bandwidth_factor
            draws = truncnorm.rvs(
                (0.0 - mu) / h, (1.0 - mu) / h, loc=mu, scale=h, size=n_samples, random_state=rng
            )
            samples[:, j] = np.clip(draws, 0.0, 1.0)
        else:
            k = kde.category_counts[j]
            index = _category_index(mu, k)
            if k > 1:
                # Widened mass on the other categories, at most uniform
                lam = min(kde.bandwidths[j] * bandwidth_factor, (k - 1) / k)
                switch = rng.random(n_samples) < lam
                # uniform over the k - 1 other categories
                offset = rng.integers(1, k, size=n_samples)
                index = np.where(switch, (index + offset) % k, index)
            samples[:, j] = (index + 0.5) / k
    return samples


def propose(
    model: KdeBudgetModel | None,
    rng: np.random.Generator,
    n_samples: int = 64,
    bandwidth_factor: float = 3.0,
) -> np.ndarray:
    """
    Candidate maximising l(x) / g(x) among draws from the good KDE.

    Ties go to the first drawn candidate.

    Raises
    ------
    ModelNotFittedError
        If the model or one of its KDEs is missing.
    """
    if model is None or model.good is None or model.bad is None:
        raise ModelNotFittedError("propose needs a fitted good and bad KDE")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")

    candidates = sample_from_kde(model.good, rng, n_samples, bandwidth_factor)
    good = density_many(model.good, candidates)
    bad = np.maximum(density_many(model.bad, candidates), _DENSITY_FLOOR)
    best = int(np.argmax(good / bad))
    return candidates[best]
