from src.run_history.history import NoMaxBudgetRecordError, RunHistory, UnknownBudgetError
from src.run_history.models import TrajectoryPoint, TrialRecord, TrialStatus
from src.run_history.serialization import (
    HistoryWriter,
    SchemaViolationError,
    SpaceDigestMismatchError,
    deserialize,
    load_history,
    save_history,
    serialize,
)

__all__ = [
    # Models
    "TrialRecord",
    "TrialStatus",
    "TrajectoryPoint",
    # History
    "RunHistory",
    # Persistence
    "HistoryWriter",
    "deserialize",
    "load_history",
    "save_history",
    "serialize",
    # Errors
    "NoMaxBudgetRecordError",
    "SchemaViolationError",
    "SpaceDigestMismatchError",
    "UnknownBudgetError",
]
