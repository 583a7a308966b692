import logging
import math
from collections.abc import Callable, Iterable

import pandas as pd

from src.design_space import DesignSpace, check_validity
from src.design_space.space import InvalidConfigurationError
from src.run_history.models import TrajectoryPoint, TrialRecord

logger = logging.getLogger(__name__)

# Relative tolerance used when matching a budget against the declared set
BUDGET_RTOL = 1e-9


class UnknownBudgetError(ValueError):
    pass


class NoMaxBudgetRecordError(LookupError):
    pass


class RunHistory:
    """Append-only log of evaluations, in completion order."""

    def __init__(
        self,
        space: DesignSpace,
        budget_set: Iterable[float],
        listeners: list[Callable[[TrialRecord], None]] | None = None,
    ):
        self.space = space
        self.budget_set: list[float] = sorted({float(b) for b in budget_set})
        if not self.budget_set:
            raise ValueError("budget_set must not be empty")
        self.records: list[TrialRecord] = []
        self._listeners = list(listeners or [])

    @property
    def space_digest(self) -> str:
        return self.space.digest

    @property
    def max_budget(self) -> float:
        return self.budget_set[-1]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def add_listener(self, listener: Callable[[TrialRecord], None]) -> None:
        """Call ``listener`` with every record appended from now on."""
        self._listeners.append(listener)

    def canonical_budget(self, budget: float) -> float:
        """Return the declared budget equal to ``budget``.

        Raises
        ------
        UnknownBudgetError
            If ``budget`` is not in the declared budget set.
        """
        for b in self.budget_set:
            if math.isclose(b, budget, rel_tol=BUDGET_RTOL):
                return b
        raise UnknownBudgetError(f"budget {budget} is not one of {self.budget_set}")

    def append(self, record: TrialRecord) -> None:
        """
        Append a record at the tail.

        Raises
        ------
        UnknownBudgetError
            If the record's budget is not declared.
        InvalidConfigurationError
            If the record's configuration fails check_validity.
        """
        self.canonical_budget(record.budget)
        violations = check_validity(self.space, record.config)
        if violations:
            raise InvalidConfigurationError(
                f"config {record.config_id}: " + "; ".join(str(v) for v in violations)
            )
        if record.finished_at < record.submitted_at:
            raise ValueError("finished_at must not precede submitted_at")
        if record.ok and (record.loss is None or not math.isfinite(record.loss)):
            raise ValueError("successful records must carry a finite loss")

        self.records.append(record)
        for listener in self._listeners:
            listener(record)

    def records_at_budget(self, budget: float) -> list[TrialRecord]:
        """All successful records at ``budget``, in completion order."""
        b = self.canonical_budget(budget)
        return [r for r in self.records if r.ok and math.isclose(r.budget, b, rel_tol=BUDGET_RTOL)]

    def successful(self) -> list[TrialRecord]:
        return [r for r in self.records if r.ok]

    def failed(self) -> list[TrialRecord]:
        return [r for r in self.records if not r.ok]

    def incumbent_trajectory(self) -> list[TrajectoryPoint]:
        """
        Running best loss over max-budget records, one point per improvement.

        Raises
        ------
        NoMaxBudgetRecordError
            If no successful record exists at the highest budget.
        """
        points: list[TrajectoryPoint] = []
        best = math.inf
        top = self.max_budget
        for index, record in enumerate(self.records, start=1):
            if not record.ok or not math.isclose(record.budget, top, rel_tol=BUDGET_RTOL):
                continue
            if record.loss < best:
                best = record.loss
                points.append(TrajectoryPoint(record.finished_at, index, best, record.config_id))
        if not points:
            raise NoMaxBudgetRecordError(f"no successful record at max budget {top}")
        return points

    def incumbent(self) -> TrialRecord:
        """Record with the lowest loss at the highest budget (earliest on ties)."""
        top = self.records_at_budget(self.max_budget)
        if not top:
            raise NoMaxBudgetRecordError(f"no successful record at max budget {self.max_budget}")
        return min(top, key=lambda r: r.loss)

    def config_by_id(self, config_id: int):
        for record in self.records:
            if record.config_id == config_id:
                return record.config
        raise KeyError(config_id)

    def to_dataframe(self) -> pd.DataFrame:
        """One row per record with the scalar fields (no configuration values)."""
        rows = [
            {
                "config_id": r.config_id,
                "bracket": r.bracket_id,
                "budget": r.budget,
                "loss": r.loss if r.ok else float("nan"),
                "status": r.status.value,
                "duration": r.duration,
                "submitted": r.submitted_at,
                "finished": r.finished_at,
                "seed": r.seed,
            }
            for r in self.records
        ]
        columns = [
            "config_id",
            "bracket",
            "budget",
            "loss",
            "status",
            "duration",
            "submitted",
            "finished",
            "seed",
        ]
        return pd.DataFrame(rows, columns=columns)
