"""Synthetic multi-fidelity objectives.

The budget is a number of noisy repetitions that are averaged, so higher
budgets give the same expected loss with less noise. Non-integer budgets
are rounded to the nearest count, at least 1.
"""

import logging
import re
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from src.design_space import (
    Condition,
    Configuration,
    DesignSpace,
    Hyperparameter,
    HyperparameterKind,
    build_space,
    default_configuration,
    ensure_valid,
)

logger = logging.getLogger(__name__)

SPHERE_SIGMA = 0.1
CONDITIONAL_SIGMA = 0.05


class UnknownObjectiveError(ValueError):
    pass


def repetitions(budget: float) -> int:
    if not budget > 0:
        raise ValueError("budget must be positive")
    return max(1, int(round(budget)))


def mean_noise(seed: int, budget: float, sigma: float) -> float:
    """Average of ``repetitions(budget)`` Normal(0, sigma^2) draws, one stream per repetition."""
    if sigma == 0:
        return 0.0
    draws = [
        np.random.default_rng([int(seed) & 0xFFFFFFFF, i]).normal(0.0, sigma)
        for i in range(repetitions(budget))
    ]
    return float(np.mean(draws))


# ─────────────────────────────────────────────────────────────────────────────
# Spaces
# ─────────────────────────────────────────────────────────────────────────────


def sphere_space(d: int) -> DesignSpace:
    """d continuous hyperparameters x0..x{d-1} on [0, 1], default 0."""
    return build_space(
        [
            Hyperparameter(f"x{i}", HyperparameterKind.CONTINUOUS, 0.0, 1.0, default=0.0)
            for i in range(d)
        ]
    )


def log_sphere_space(d: int) -> DesignSpace:
    """d log-scale hyperparameters on [1e-4, 1], default 1."""
    return build_space(
        [
            Hyperparameter(
                f"x{i}", HyperparameterKind.CONTINUOUS, 1e-4, 1.0, log_scale=True, default=1.0
            )
            for i in range(d)
        ]
    )


@lru_cache(maxsize=1)
def conditional_space() -> DesignSpace:
    """A categorical branch with one continuous child per branch."""
    return build_space(
        [
            Hyperparameter("branch", HyperparameterKind.CATEGORICAL, choices=("a", "b")),
            Hyperparameter("child_a", HyperparameterKind.CONTINUOUS, 0.0, 1.0, default=0.5),
            Hyperparameter("child_b", HyperparameterKind.CONTINUOUS, 0.0, 1.0, default=0.5),
        ],
        [
            Condition("child_a", "branch", ("a",)),
            Condition("child_b", "branch", ("b",)),
        ],
    )


# ─────────────────────────────────────────────────────────────────────────────
# Objectives
# ─────────────────────────────────────────────────────────────────────────────


def _coordinates(config: Configuration, d: int) -> np.ndarray:
    return np.array([float(config[f"x{i}"]) for i in range(d)])


def eval_noisy_sphere(
    config: Configuration, budget: float, seed: int, sigma: float = SPHERE_SIGMA
) -> float:
    """||x - 0.5||^2 plus the mean of ``budget`` Normal(0, sigma^2) draws."""
    x = _coordinates(config, len(config.values))
    return float(np.sum((x - 0.5) ** 2)) + mean_noise(seed, budget, sigma)


def eval_log_sphere(
    config: Configuration, budget: float, seed: int, sigma: float = SPHERE_SIGMA
) -> float:
    """Noisy sphere on (log10 x + 4) / 4; the optimum is x = 1e-2 in every coordinate."""
    x = _coordinates(config, len(config.values))
    z = (np.log10(x) + 4.0) / 4.0
    return float(np.sum((z - 0.5) ** 2)) + mean_noise(seed, budget, sigma)


def eval_conditional_mixed(
    config: Configuration, budget: float, seed: int, sigma: float = CONDITIONAL_SIGMA
) -> float:
    """
    (child_a - 0.3)^2 + 0.1 on branch a, (child_b - 0.7)^2 on branch b, plus noise.

    Raises
    ------
    InvalidConfigurationError
        If activity or values are inconsistent with the conditional space.
    """
    ensure_valid(conditional_space(), config)

    if config["branch"] == "a":
        loss = (float(config["child_a"]) - 0.3) ** 2 + 0.1
    else:
        loss = (float(config["child_b"]) - 0.7) ** 2
    return loss + mean_noise(seed, budget, sigma)


@dataclass(frozen=True)
class SyntheticObjective:
    """A named benchmark: its space, noise level and known optimum."""

    name: str
    space: DesignSpace
    evaluate: Callable[..., float]
    sigma: float
    optimum_loss: float
    optimum: dict

    def __call__(self, config: Configuration, budget: float, seed: int) -> float:
        return self.evaluate(config, budget, seed, sigma=self.sigma)

    @property
    def default_loss(self) -> float:
        """Noise-free loss of the space's default configuration."""
        return self.evaluate(default_configuration(self.space), 1.0, 0, sigma=0.0)


_PATTERNS = {
    "noisy-sphere": re.compile(r"^noisy-sphere-d(\d+)$"),
    "log-sphere": re.compile(r"^log-sphere-d(\d+)$"),
}


def get_objective(name: str, sigma: float | None = None) -> SyntheticObjective:
    """
    Look up a benchmark by name.

    Known names are ``noisy-sphere-d<k>``, ``log-sphere-d<k>`` and
    ``conditional-mixed``.

    Raises
    ------
    UnknownObjectiveError
        If the name matches no benchmark.
    """
    if sigma is not None and not sigma >= 0:
        raise ValueError("sigma must be non-negative")

    for kind, pattern in _PATTERNS.items():
        match = pattern.match(name)
        if not match:
            continue
        d = int(match.group(1))
        if d < 1:
            raise UnknownObjectiveError(f"'{name}': dimension must be positive")
        if kind == "noisy-sphere":
            space, evaluate, best = sphere_space(d), eval_noisy_sphere, 0.5
        else:
            space, evaluate, best = log_sphere_space(d), eval_log_sphere, 1e-2
        return SyntheticObjective(
            name=name,
            space=space,
            evaluate=evaluate,
            sigma=SPHERE_SIGMA if sigma is None else sigma,
            optimum_loss=0.0,
            optimum={f"x{i}": best for i in range(d)},
        )

    if name == "conditional-mixed":
        return SyntheticObjective(
            name=name,
            space=conditional_space(),
            evaluate=eval_conditional_mixed,
            sigma=CONDITIONAL_SIGMA if sigma is None else sigma,
            optimum_loss=0.0,
            optimum={"branch": "b", "child_b": 0.7},
        )

    raise UnknownObjectiveError(
        f"unknown objective '{name}' (known: noisy-sphere-d<k>, log-sphere-d<k>, "
        "conditional-mixed)"
    )

