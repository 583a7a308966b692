"""Synthetic benchmark objectives where the budget is a repetition count."""

from src.benchmarks.objectives import (
    SyntheticObjective,
    UnknownObjectiveError,
    conditional_space,
    eval_conditional_mixed,
    eval_log_sphere,
    eval_noisy_sphere,
    get_objective,
    log_sphere_space,
    repetitions,
    sphere_space,
)

__all__ = [
    # Registry
    "SyntheticObjective",
    "get_objective",
    # Objectives
    "eval_conditional_mixed",
    "eval_log_sphere",
    "eval_noisy_sphere",
    "repetitions",
    # Spaces
    "conditional_space",
    "log_sphere_space",
    "sphere_space",
    # Errors
    "UnknownObjectiveError",
]
