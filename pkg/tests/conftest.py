import numpy as np
import pytest

from src.design_space import Condition, Hyperparameter, HyperparameterKind, build_space
from src.design_space.space import CHOICE_KINDS

KINDS = tuple(HyperparameterKind)


def _random_hyperparameter(rng: np.random.Generator, name: str) -> Hyperparameter:
    kind = KINDS[rng.integers(len(KINDS))]
    log = bool(rng.random() < 0.3)
    if kind == HyperparameterKind.CONTINUOUS:
        if log:
            lower = float(10 ** rng.uniform(-5, 0))
            upper = float(lower * 10 ** rng.uniform(0.5, 4))
        else:
            lower = float(rng.uniform(-10, 10))
            upper = float(lower + rng.uniform(0.1, 20))
        return Hyperparameter(name, kind, lower=lower, upper=upper, log_scale=log)
    if kind == HyperparameterKind.INTEGER:
        lower = int(rng.integers(1, 10)) if log else int(rng.integers(-50, 50))
        upper = lower + int(rng.integers(1, 1000))
        return Hyperparameter(name, kind, lower=lower, upper=upper, log_scale=log)
    k = int(rng.integers(2, 6))
    if kind == HyperparameterKind.ORDINAL:
        choices = tuple(int(v) for v in np.sort(rng.choice(100, size=k, replace=False)))
    else:
        choices = tuple(f"{name}_c{i}" for i in range(k))
    return Hyperparameter(name, kind, choices=choices)


def make_random_space(rng: np.random.Generator, conditional: bool = True, max_dim: int = 6):
    """
    A random mixed space of 1 to ``max_dim`` hyperparameters.

    With ``conditional`` set, each later hyperparameter may hang off an
    earlier choice hyperparameter with a random non-empty set of values.
    """
    hps = [_random_hyperparameter(rng, f"h{i}") for i in range(int(rng.integers(1, max_dim + 1)))]
    conditions = []
    if conditional:
        for i, hp in enumerate(hps[1:], start=1):
            parents = [p for p in hps[:i] if p.kind in CHOICE_KINDS]
            if not parents or rng.random() < 0.5:
                continue
            parent = parents[rng.integers(len(parents))]
            n_values = int(rng.integers(1, parent.n_choices + 1))
            picked = rng.choice(parent.n_choices, size=n_values, replace=False)
            values = tuple(parent.choices[j] for j in sorted(picked))
            conditions.append(Condition(hp.name, parent.name, values))
    return build_space(hps, conditions)


@pytest.fixture
def random_space():
    """Factory for random mixed design spaces: ``random_space(rng, conditional=True)``."""
    return make_random_space
