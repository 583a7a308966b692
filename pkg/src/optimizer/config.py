"""Configuration of the BOHB optimizer."""

import math
from dataclasses import dataclass
from typing import Literal


class ConfigurationError(ValueError):
    """Raised for an invalid OptimizerConfig."""

    pass


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of one optimization run.

    The model constants (gamma, n_samples, bandwidth_factor, rho) default to
    the usual BOHB values.
    """

    b_min: float = 1.0
    b_max: float = 9.0
    eta: int = 3
    n_iterations: int = 12
    # probability of sampling at random instead of from the model
    rho: float = 1 / 3
    gamma: float = 0.15
    n_samples: int = 64
    bandwidth_factor: float = 3.0
    n_workers: int = 1
    seed: int = 0
    wall_clock_limit: float | None = None
    # declared budgets; planned budgets are snapped onto them
    budgets: tuple[float, ...] | None = None
    # "hyperband" cycles all brackets, "sh" runs only the most aggressive one
    brackets: Literal["hyperband", "sh"] = "hyperband"
    # "virtual" timestamps advance by the budget consumed; "wall" uses seconds
    clock: Literal["virtual", "wall"] = "virtual"
    pool: Literal["thread", "process"] = "thread"

    def __post_init__(self):
        errors = []
        if not 0.0 <= self.rho <= 1.0:
            errors.append(f"rho must lie in [0, 1], got {self.rho}")
        if not 0.0 < self.gamma < 1.0:
            errors.append(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.n_workers < 1:
            errors.append(f"n_workers must be >= 1, got {self.n_workers}")
        if self.n_iterations < 1:
            errors.append(f"n_iterations must be >= 1, got {self.n_iterations}")
        if self.n_samples < 1:
            errors.append(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.bandwidth_factor > 0:
            errors.append(f"bandwidth_factor must be positive, got {self.bandwidth_factor}")
        if not (0 < self.b_min <= self.b_max and math.isfinite(self.b_max)):
            errors.append(f"need 0 < b_min <= b_max, got {self.b_min} and {self.b_max}")
        if isinstance(self.eta, bool) or int(self.eta) != self.eta or self.eta < 2:
            errors.append(f"eta must be an integer >= 2, got {self.eta}")
        if self.wall_clock_limit is not None and not self.wall_clock_limit > 0:
            errors.append(f"wall_clock_limit must be positive, got {self.wall_clock_limit}")
        if self.brackets not in ("hyperband", "sh"):
            errors.append(f"brackets must be 'hyperband' or 'sh', got {self.brackets!r}")
        if self.clock not in ("virtual", "wall"):
            errors.append(f"clock must be 'virtual' or 'wall', got {self.clock!r}")
        if self.pool not in ("thread", "process"):
            errors.append(f"pool must be 'thread' or 'process', got {self.pool!r}")
        if errors:
            raise ConfigurationError("; ".join(errors))
