import math

import numpy as np

from src.design_space.space import (
    INACTIVE,
    Configuration,
    DesignSpace,
    Hyperparameter,
    HyperparameterKind,
)


def _sample_value(hp: Hyperparameter, rng: np.random.Generator):
    if hp.kind in (HyperparameterKind.CATEGORICAL, HyperparameterKind.ORDINAL):
        return hp.choices[int(rng.integers(hp.n_choices))]

    if hp.kind == HyperparameterKind.INTEGER:
        if not hp.log_scale:
            return int(rng.integers(hp.lower, hp.upper + 1))
        # log-uniform on the relaxed range, then rounded
        lo, hi = math.log(hp.lower - 0.5), math.log(hp.upper + 0.5)
        value = round(math.exp(rng.uniform(lo, hi)))
        return int(min(max(value, hp.lower), hp.upper))

    if hp.log_scale:
        value = math.exp(rng.uniform(math.log(hp.lower), math.log(hp.upper)))
    else:
        value = rng.uniform(hp.lower, hp.upper)
    return float(min(max(value, hp.lower), hp.upper))


def sample_configuration(space: DesignSpace, rng: np.random.Generator) -> Configuration:
    """
    Draw a random configuration.

    Active hyperparameters are drawn uniformly in native space (in log space
    when ``log_scale`` is set). Children are drawn only when their condition
    holds, in topological order, so the random stream depends only on the
    values that were actually drawn.

    Parameters
    ----------
    space : DesignSpace
        A validated space.
    rng : numpy.random.Generator
        Caller-owned generator; a fixed seed gives identical output.
    """
    values = {}
    active = {}
    for name in space.topological_order:
        cond = space.condition_for(name)
        is_active = cond is None or (
            active[cond.parent] and cond.is_satisfied_by(values[cond.parent])
        )
        active[name] = is_active
        values[name] = _sample_value(space[name], rng) if is_active else INACTIVE

    return Configuration(
        values={n: values[n] for n in space.names},
        active={n: active[n] for n in space.names},
    )


def default_configuration(space: DesignSpace) -> Configuration:
    """Every hyperparameter at its declared default, activity recomputed."""
    return space.make_configuration({hp.name: hp.default for hp in space.hyperparameters})
