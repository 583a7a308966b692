"""Rank correlation of losses across budgets."""

import logging

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from src.run_history import RunHistory

logger = logging.getLogger(__name__)

MIN_PAIRS = 3


def spearman_from_losses(losses_a, losses_b) -> float | None:
    """
    Spearman's rho of two paired loss vectors, with average ranks for ties.

    Returns None (undefined) for fewer than 3 pairs or when either side has
    no rank variance.
    """
    a = np.asarray(losses_a, dtype=float)
    b = np.asarray(losses_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired losses must have the same length")
    if a.shape[0] < MIN_PAIRS or np.all(a == a[0]) or np.all(b == b[0]):
        return None
    return float(spearmanr(a, b).statistic)


def paired_losses(history: RunHistory, budget_a: float, budget_b: float) -> pd.DataFrame:
    """Mean loss per config_id at both budgets, for configs evaluated successfully at both."""

    def per_config(budget):
        records = history.records_at_budget(budget)
        frame = pd.DataFrame(
            {"config_id": [r.config_id for r in records], "loss": [r.loss for r in records]},
            columns=["config_id", "loss"],
        )
        return frame.groupby("config_id")["loss"].mean()

    joined = pd.concat([per_config(budget_a), per_config(budget_b)], axis=1, join="inner")
    joined.columns = ["loss_a", "loss_b"]
    return joined.sort_index()


def spearman_rank_correlation(
    history: RunHistory, budget_a: float, budget_b: float
) -> float | None:
    """
    Spearman's rho between the losses of the configurations seen at both budgets.

    Repeated evaluations of one config_id on a budget are averaged first.

    Raises
    ------
    UnknownBudgetError
        If either budget is not declared in the history.
    """
    pairs = paired_losses(history, budget_a, budget_b)
    return spearman_from_losses(pairs["loss_a"].to_numpy(), pairs["loss_b"].to_numpy())


def rank_correlation_matrix(
    history: RunHistory, budgets: list[float] | None = None
) -> pd.DataFrame:
    """Symmetric matrix of rank correlations for all budget pairs; undefined entries are NaN."""
    budgets = list(budgets) if budgets is not None else history.budget_set
    matrix = pd.DataFrame(np.nan, index=budgets, columns=budgets, dtype=float)
    for i, a in enumerate(budgets):
        for b in budgets[i:]:
            rho = spearman_rank_correlation(history, a, b)
            if rho is None:
                continue
            matrix.loc[a, b] = rho
            matrix.loc[b, a] = rho
    undefined = int(matrix.isna().to_numpy().sum())
    if undefined:
        logger.debug(f"{undefined} rank correlation entr(ies) undefined")
    return matrix
