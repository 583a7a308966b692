import logging
import math
from dataclasses import dataclass, field

import pandas as pd

from src.analysis.correlation import rank_correlation_matrix
from src.analysis.footprint import (
    FootprintEmbedding,
    MdsParams,
    SpaceMismatchError,
    build_footprint,
)
from src.analysis.forest import ForestParams, NotEnoughDataError, fit_forest
from src.analysis.importance import LpiCurve, decompose, lpi_curves, lpi_fractions
from src.design_space import Configuration, DesignSpace
from src.run_history import NoMaxBudgetRecordError, RunHistory, TrajectoryPoint

logger = logging.getLogger(__name__)


class EmptyHistoryError(ValueError):
    pass


@dataclass(frozen=True)
class ReportParams:
    forest: ForestParams = field(default_factory=ForestParams)
    mds: MdsParams = field(default_factory=MdsParams)
    # budgets to compute importance for; None means all declared budgets
    budgets: tuple[float, ...] | None = None
    interactions: bool = False


@dataclass(frozen=True)
class HyperparameterImportance:
    name: str
    fanova_mean: float
    fanova_std: float
    lpi: float


@dataclass(frozen=True)
class PairImportance:
    name_a: str
    name_b: str
    fanova_mean: float
    fanova_std: float


@dataclass
class BudgetImportance:
    budget: float
    n_obs: int
    rows: list[HyperparameterImportance] = field(default_factory=list)
    pairs: list[PairImportance] = field(default_factory=list)
    lpi_curves: dict[str, LpiCurve] = field(default_factory=dict)
    degenerate: bool = False
    note: str | None = None

    @property
    def skipped(self) -> bool:
        return self.note is not None


@dataclass
class AnalysisReport:
    space_digest: str
    budgets: list[float]
    n_records: int
    n_failed: int
    importance: dict[float, BudgetImportance]
    rank_correlation: pd.DataFrame
    trajectory: list[TrajectoryPoint]
    footprint: FootprintEmbedding | None
    incumbent_id: int | None = None
    incumbent_loss: float | None = None
    incumbent_config: dict | None = None
    notes: list[str] = field(default_factory=list)


def _lpi_reference(history: RunHistory, budget: float) -> Configuration | None:
    """The max-budget incumbent, else the best configuration at ``budget``."""
    try:
        return history.incumbent().config
    except NoMaxBudgetRecordError:
        records = history.records_at_budget(budget)
        if not records:
            return None
        return min(records, key=lambda r: r.loss).config


def budget_importance(
    history: RunHistory,
    space: DesignSpace,
    budget: float,
    params: ReportParams,
) -> BudgetImportance:
    """fANOVA and LPI on the successful records of one budget."""
    records = history.records_at_budget(budget)
    block = BudgetImportance(budget=budget, n_obs=len(records))
    try:
        forest = fit_forest(records, space, params.forest, budget)
    except NotEnoughDataError as e:
        block.note = f"NotEnoughData: {e}"
        logger.warning(f"Skipping importance at budget {budget}: {e}")
        return block

    fanova = decompose(forest, interactions=params.interactions)
    block.degenerate = fanova.degenerate

    reference = _lpi_reference(history, budget)
    curves = lpi_curves(forest, space, reference) if reference is not None else {}
    fractions = lpi_fractions(curves) if curves else {}
    block.lpi_curves = curves

    for j, name in enumerate(space.names):
        estimate = fanova.single(j)
        block.rows.append(
            HyperparameterImportance(
                name=name,
                fanova_mean=estimate.mean,
                fanova_std=estimate.std,
                lpi=fractions.get(name, math.nan),
            )
        )
    for j, k in sorted(fanova.pairs):
        estimate = fanova.pair(j, k)
        block.pairs.append(
            PairImportance(space.names[j], space.names[k], estimate.mean, estimate.std)
        )

    top = max(block.rows, key=lambda r: r.fanova_mean)
    logger.info(
        f"Importance at budget {budget} on {block.n_obs} record(s): "
        f"most important '{top.name}' ({top.fanova_mean:.1%})"
    )
    return block


def build_report(
    history: RunHistory, space: DesignSpace, params: ReportParams | None = None
) -> AnalysisReport:
    """
    Run every analysis on a finished history.

    Parameters
    ----------
    history : RunHistory
        The evaluations; never extended here.
    space : DesignSpace
        Space the history was recorded on.
    params : ReportParams, optional
        Forest, MDS and budget-filter settings.

    Returns
    -------
    AnalysisReport
        Per-budget importance (with a NotEnoughData note where too few records
        exist), the budget rank-correlation matrix, the footprint of every
        distinct configuration and the incumbent trajectory.

    Raises
    ------
    EmptyHistoryError
        If the history has no records.
    SpaceMismatchError
        If the history was recorded on another space.
    """
    params = params or ReportParams()
    if len(history) == 0:
        raise EmptyHistoryError("the history has no records")
    if history.space_digest != space.digest:
        raise SpaceMismatchError("the history was recorded on a different design space")

    budgets = history.budget_set
    if params.budgets is not None:
        budgets = [history.canonical_budget(b) for b in params.budgets]

    notes = []
    n_failed = len(history.failed())
    if n_failed:
        notes.append(f"{n_failed} failed trial(s) excluded from the analyses")

    importance = {b: budget_importance(history, space, b, params) for b in budgets}
    correlation = rank_correlation_matrix(history)

    try:
        trajectory = history.incumbent_trajectory()
        best = history.incumbent()
        incumbent = (best.config_id, best.loss, best.config.to_dict())
    except NoMaxBudgetRecordError as e:
        trajectory, incumbent = [], (None, None, None)
        notes.append(f"NoMaxBudgetRecord: {e}")
        logger.warning(f"No incumbent trajectory: {e}")

    n_configs = len({r.config_id for r in history.records})
    footprint = None
    if n_configs >= 3:
        footprint = build_footprint(history, space, params.mds)
    else:
        notes.append(f"NotEnoughData: footprint needs 3 configurations, found {n_configs}")
        logger.warning("Skipping footprint: fewer than 3 configurations")

    return AnalysisReport(
        space_digest=history.space_digest,
        budgets=list(budgets),
        n_records=len(history),
        n_failed=n_failed,
        importance=importance,
        rank_correlation=correlation,
        trajectory=trajectory,
        footprint=footprint,
        incumbent_id=incumbent[0],
        incumbent_loss=incumbent[1],
        incumbent_config=incumbent[2],
        notes=notes,
    )
