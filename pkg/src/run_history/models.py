import enum
import math
from dataclasses import dataclass

from src.design_space import Configuration


class TrialStatus(enum.Enum):
    OK = "ok"
    FAILED = "failed"


@dataclass(frozen=True)
class TrialRecord:
    """One evaluation of a configuration on a budget."""

    config_id: int
    bracket_id: int
    budget: float
    config: Configuration
    loss: float | None  # None when FAILED
    status: TrialStatus
    duration: float
    submitted_at: float
    finished_at: float
    seed: int

    @property
    def ok(self) -> bool:
        return self.status == TrialStatus.OK

    @property
    def loss_or_inf(self) -> float:
        """Loss used for ranking; failed trials rank last."""
        return self.loss if self.ok else math.inf


@dataclass(frozen=True)
class TrajectoryPoint:
    finished_at: float
    evaluation_index: int  # 1-based position in the history
    best_loss: float
    config_id: int
