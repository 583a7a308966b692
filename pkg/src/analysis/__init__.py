"""Post-hoc analysis of a run history: importance, rank correlation and footprints."""

from src.analysis.correlation import (
    rank_correlation_matrix,
    spearman_from_losses,
    spearman_rank_correlation,
)
from src.analysis.footprint import (
    FootprintEmbedding,
    MdsParams,
    MdsResult,
    SpaceMismatchError,
    build_footprint,
    gower_distance,
    gower_matrix,
    mds_footprint,
)
from src.analysis.forest import (
    ForestParams,
    ForestSurrogate,
    NotEnoughDataError,
    TreeBoxes,
    fit_forest,
    fit_forest_arrays,
)
from src.analysis.importance import (
    DimensionOutOfRangeError,
    ImportanceEstimate,
    InvalidIncumbentError,
    decompose,
    fanova_importance,
    lpi,
    lpi_curves,
    tree_marginal,
)
from src.analysis.pipeline import AnalysisReport, EmptyHistoryError, ReportParams, build_report
from src.analysis.report import format_budget, write_report

__all__ = [
    # Main pipeline
    "build_report",
    "write_report",
    "AnalysisReport",
    "ReportParams",
    "format_budget",
    # Forest surrogate
    "ForestParams",
    "ForestSurrogate",
    "TreeBoxes",
    "fit_forest",
    "fit_forest_arrays",
    # Importance
    "ImportanceEstimate",
    "decompose",
    "fanova_importance",
    "lpi",
    "lpi_curves",
    "tree_marginal",
    # Rank correlation
    "rank_correlation_matrix",
    "spearman_from_losses",
    "spearman_rank_correlation",
    # Footprint
    "FootprintEmbedding",
    "MdsParams",
    "MdsResult",
    "build_footprint",
    "gower_distance",
    "gower_matrix",
    "mds_footprint",
    # Errors
    "DimensionOutOfRangeError",
    "EmptyHistoryError",
    "InvalidIncumbentError",
    "NotEnoughDataError",
    "SpaceMismatchError",
]
