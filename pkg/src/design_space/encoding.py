"""Unit-hypercube encoding of configurations.

Numeric hyperparameters map (log-)linearly onto [0, 1]; integers use the
relaxed range [lower - 0.5, upper + 0.5]. A choice hyperparameter with k
choices maps index i to the bin centre (i + 0.5) / k. Inactive entries are
imputed with the encoding of the default value and flagged in the mask.
"""

import math

import numpy as np

from src.design_space.space import (
    CHOICE_KINDS,
    INACTIVE,
    Configuration,
    DesignSpace,
    Hyperparameter,
    HyperparameterKind,
)


class ValueOutOfBoundsError(ValueError):
    pass


class WrongDimensionError(ValueError):
    pass


class ComponentOutOfRangeError(ValueError):
    pass


def _numeric_range(hp: Hyperparameter) -> tuple[float, float]:
    lo, hi = float(hp.lower), float(hp.upper)
    if hp.kind == HyperparameterKind.INTEGER:
        lo, hi = lo - 0.5, hi + 0.5
    if hp.log_scale:
        return math.log(lo), math.log(hi)
    return lo, hi


def encode_value(hp: Hyperparameter, value) -> float:
    """Encode one native value into [0, 1]."""
    if not hp.contains(value):
        raise ValueOutOfBoundsError(f"{value!r} is not a legal value of '{hp.name}'")
    if hp.kind in CHOICE_KINDS:
        return (hp.index_of(value) + 0.5) / hp.n_choices
    lo, hi = _numeric_range(hp)
    x = math.log(value) if hp.log_scale else float(value)
    return min(max((x - lo) / (hi - lo), 0.0), 1.0)


def decode_value(hp: Hyperparameter, u: float):
    """Decode one unit-interval component into a native value."""
    if hp.kind in CHOICE_KINDS:
        k = hp.n_choices
        return hp.choices[min(int(math.floor(u * k)), k - 1)]
    lo, hi = _numeric_range(hp)
    x = lo + u * (hi - lo)
    value = math.exp(x) if hp.log_scale else x
    if hp.kind == HyperparameterKind.INTEGER:
        return int(min(max(round(value), hp.lower), hp.upper))
    return float(min(max(value, hp.lower), hp.upper))


def to_unit_vector(space: DesignSpace, config: Configuration) -> tuple[np.ndarray, np.ndarray]:
    """
    Encode a configuration.

    Returns
    -------
    tuple of numpy.ndarray
        ``(vector, active_mask)`` with ``d`` entries each.

    Raises
    ------
    ValueOutOfBoundsError
        If an active value is not legal for its hyperparameter.
    """
    vector = np.empty(space.dimension)
    mask = np.zeros(space.dimension, dtype=bool)
    for j, hp in enumerate(space.hyperparameters):
        is_active = config.active.get(hp.name, False)
        value = config.values.get(hp.name, INACTIVE)
        if is_active:
            vector[j] = encode_value(hp, value)
            mask[j] = True
        else:
            vector[j] = encode_value(hp, hp.default)
    return vector, mask


def from_unit_vector(space: DesignSpace, vector) -> Configuration:
    """
    Decode a unit vector; activity is recomputed from the decoded parents.

    Raises
    ------
    WrongDimensionError
        If the vector does not have ``d`` entries.
    ComponentOutOfRangeError
        If a component lies outside [0, 1].
    """
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1 or vector.shape[0] != space.dimension:
        raise WrongDimensionError(
            f"expected a vector of length {space.dimension}, got shape {vector.shape}"
        )
    if np.any(~np.isfinite(vector)) or np.any(vector < 0.0) or np.any(vector > 1.0):
        raise ComponentOutOfRangeError("vector components must lie in [0, 1]")

    values = {
        hp.name: decode_value(hp, float(vector[j])) for j, hp in enumerate(space.hyperparameters)
    }
    return space.make_configuration(values)


def encode_many(space: DesignSpace, configs: list[Configuration]) -> tuple[np.ndarray, np.ndarray]:
    """Stack the encodings of several configurations into ``(n, d)`` arrays."""
    if not configs:
        return np.empty((0, space.dimension)), np.empty((0, space.dimension), dtype=bool)
    vectors, masks = zip(*(to_unit_vector(space, c) for c in configs))
    return np.vstack(vectors), np.vstack(masks)
