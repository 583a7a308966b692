"""BOHB: KDE models inside HyperBand brackets."""

from src.optimizer.bohb import (
    BOHB,
    BudgetData,
    FminResult,
    ObjectiveError,
    collect_budget_data,
    default_config_seed,
    fmin,
    get_config,
    trial_seed,
)
from src.optimizer.config import ConfigurationError, OptimizerConfig
from src.optimizer.kde import (
    DimensionMismatchError,
    EmptyPointSetError,
    Kde,
    KdeBudgetModel,
    ModelNotFittedError,
    NotEnoughObservationsError,
    density,
    fit_budget_model,
    fit_kde,
    propose,
    select_model_budget,
    split_good_bad,
)
from src.optimizer.scheduler import (
    BracketPlan,
    HyperbandScheduler,
    IllegalBudgetsError,
    IllegalEtaError,
    IncompleteRungError,
    NoWorkAvailableError,
    budgets_of,
    plan_hyperband,
    plan_successive_halving,
    successive_halving_promote,
)
from src.optimizer.workers import CommandObjective, Objective, TrialFailure, WorkerPool

__all__ = [
    # Entry points
    "BOHB",
    "FminResult",
    "fmin",
    "get_config",
    "trial_seed",
    "default_config_seed",
    "collect_budget_data",
    "BudgetData",
    "OptimizerConfig",
    # Density models
    "Kde",
    "KdeBudgetModel",
    "density",
    "fit_budget_model",
    "fit_kde",
    "propose",
    "select_model_budget",
    "split_good_bad",
    # Scheduling
    "BracketPlan",
    "HyperbandScheduler",
    "budgets_of",
    "plan_hyperband",
    "plan_successive_halving",
    "successive_halving_promote",
    # Workers
    "CommandObjective",
    "Objective",
    "WorkerPool",
    # Errors
    "ConfigurationError",
    "DimensionMismatchError",
    "EmptyPointSetError",
    "IllegalBudgetsError",
    "IllegalEtaError",
    "IncompleteRungError",
    "ModelNotFittedError",
    "NotEnoughObservationsError",
    "NoWorkAvailableError",
    "ObjectiveError",
    "TrialFailure",
]
