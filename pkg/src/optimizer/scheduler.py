"""HyperBand bracket planning and successive-halving bookkeeping.

Brackets run one after another; the slots of a rung may run in parallel.
A rung is promoted exactly once, when every member has a result.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


class SchedulerError(Exception):
    pass


class IllegalBudgetsError(SchedulerError, ValueError):
    pass


class IllegalEtaError(SchedulerError, ValueError):
    pass


class IncompleteRungError(SchedulerError):
    pass


class NoWorkAvailableError(SchedulerError):
    """Every open slot is waiting on an in-flight result."""

    pass


# ─────────────────────────────────────────────────────────────────────────────
# Planning
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class BracketPlan:
    s: int
    n0: int
    budgets: tuple[float, ...]
    survivors: tuple[int, ...]

    @property
    def n_rungs(self) -> int:
        return len(self.budgets)

    @property
    def total_budget(self) -> float:
        return sum(n * b for n, b in zip(self.survivors, self.budgets))


def _snap(budget: float, budget_set: list[float] | None) -> float:
    if not budget_set:
        return budget
    return min(budget_set, key=lambda b: (abs(b - budget), b))


def plan_hyperband(
    b_min: float,
    b_max: float,
    eta: int = 3,
    budget_set: list[float] | None = None,
) -> list[BracketPlan]:
    """
    Plan the brackets of one HyperBand iteration, most aggressive first.

    s_max = floor(log_eta(b_max / b_min)); bracket s starts n0 = ceil((s_max + 1)
    / (s + 1) * eta^s) configurations at b_max * eta^-s and keeps
    floor(n / eta) per rung up to b_max.

    Parameters
    ----------
    b_min, b_max : float
        Budget range, 0 < b_min <= b_max.
    eta : int
        Halving rate, an integer >= 2.
    budget_set : list of float, optional
        Declared budgets; planned budgets are snapped to the nearest one.

    Raises
    ------
    IllegalBudgetsError, IllegalEtaError
    """
    if isinstance(eta, bool) or int(eta) != eta or eta < 2:
        raise IllegalEtaError(f"eta must be an integer >= 2, got {eta}")
    eta = int(eta)
    if not (math.isfinite(b_min) and math.isfinite(b_max)) or not 0 < b_min <= b_max:
        raise IllegalBudgetsError(f"need 0 < b_min <= b_max, got b_min={b_min}, b_max={b_max}")

    # Integer search instead of floor(log()) to stay exact on ratios like 9/1
    s_max = 0
    while b_max / eta ** (s_max + 1) >= b_min * (1 - 1e-9):
        s_max += 1

    plans = []
    for s in range(s_max, -1, -1):
        n0 = math.ceil((s_max + 1) / (s + 1) * eta**s - 1e-9)
        budgets = tuple(_snap(b_max / eta ** (s - i), budget_set) for i in range(s + 1))
        survivors = [n0]
        for _ in range(s):
            survivors.append(survivors[-1] // eta)
        plans.append(BracketPlan(s=s, n0=n0, budgets=budgets, survivors=tuple(survivors)))
    return plans


def plan_successive_halving(
    b_min: float, b_max: float, eta: int = 3, budget_set: list[float] | None = None
) -> list[BracketPlan]:
    """The single most aggressive bracket, i.e. plain successive halving."""
    return plan_hyperband(b_min, b_max, eta, budget_set)[:1]


def budgets_of(plans: list[BracketPlan]) -> list[float]:
    """Sorted distinct budgets used by a set of plans."""
    return sorted({b for plan in plans for b in plan.budgets})


def successive_halving_promote(
    rung: list[tuple[int, float]], eta: int, final: bool = False, keep: int | None = None
) -> list[int]:
    """
    Select the floor(n / eta) best config ids of a completed rung.

    ``keep`` overrides floor(n / eta) with a planned survivor count, so a rung
    that lost members to failures still promotes as many as its plan allows.

    Failed evaluations must be passed as ``math.inf``. Ties go to the smaller
    config id; the result is independent of input order.

    Raises
    ------
    IncompleteRungError
        If a member has no loss, or a non-final rung would promote nobody.
    """
    if any(loss is None or math.isnan(loss) for _, loss in rung):
        raise IncompleteRungError("every member of the rung needs a loss")
    k = len(rung) // eta if keep is None else min(keep, len(rung))
    if k == 0 and not final:
        raise IncompleteRungError(f"a rung of {len(rung)} cannot be halved with eta={eta}")
    ranked = sorted(rung, key=lambda item: (item[1], item[0]))
    return [config_id for config_id, _ in ranked[:k]]


# ─────────────────────────────────────────────────────────────────────────────
# Run-time state
# ─────────────────────────────────────────────────────────────────────────────


class JobKind(enum.Enum):
    NEW_CONFIG = "new_config"
    PROMOTION = "promotion"


@dataclass(frozen=True)
class JobSpec:
    kind: JobKind
    bracket_id: int
    rung: int
    budget: float
    config_id: int | None = None


@dataclass
class RungState:
    bracket_id: int
    rung: int
    budget: float
    size: int
    # config ids queued for a promotion rung, not yet dispatched
    queued: list[int] = field(default_factory=list)
    pending: set[int] = field(default_factory=set)
    completed: dict[int, float] = field(default_factory=dict)
    dispatched: int = 0
    promoted: bool = False

    @property
    def is_complete(self) -> bool:
        return len(self.completed) == self.size


class BracketState:
    """Progress of one bracket through its rungs."""

    def __init__(self, bracket_id: int, plan: BracketPlan, eta: int):
        self.bracket_id = bracket_id
        self.plan = plan
        self.eta = eta
        self.rungs = [
            RungState(bracket_id, i, plan.budgets[i], plan.survivors[i])
            for i in range(plan.n_rungs)
        ]
        self.current = 0
        self.truncated = False

    @property
    def finished(self) -> bool:
        last = len(self.rungs) - 1
        return self.truncated or (self.current == last and self.rungs[last].is_complete)

    @property
    def in_flight(self) -> int:
        return sum(len(r.pending) for r in self.rungs)

    def next_job(self) -> JobSpec | None:
        if self.finished:
            return None
        rung = self.rungs[self.current]
        if rung.dispatched >= rung.size:
            return None
        if self.current == 0:
            rung.dispatched += 1
            return JobSpec(JobKind.NEW_CONFIG, self.bracket_id, 0, rung.budget)
        config_id = rung.queued[rung.dispatched]
        rung.dispatched += 1
        rung.pending.add(config_id)
        return JobSpec(JobKind.PROMOTION, self.bracket_id, self.current, rung.budget, config_id)

    def register(self, job: JobSpec, config_id: int) -> None:
        """Record the id a NEW_CONFIG job was resolved to."""
        self.rungs[job.rung].pending.add(config_id)

    def report(self, rung_index: int, config_id: int, loss: float) -> list[int] | None:
        """
        Record a result; promote when the rung is complete.

        Returns the promoted ids when this result completed a non-final rung.
        """
        rung = self.rungs[rung_index]
        rung.pending.discard(config_id)
        rung.completed[config_id] = loss
        if not rung.is_complete or rung.promoted or rung_index == len(self.rungs) - 1:
            return None
        promoted = successive_halving_promote(
            list(rung.completed.items()), self.eta, keep=self.plan.survivors[rung_index + 1]
        )
        # failed trials are never promoted
        promoted = [cid for cid in promoted if math.isfinite(rung.completed[cid])]
        rung.promoted = True
        if not promoted:
            self.truncate()
            return promoted
        nxt = self.rungs[rung_index + 1]
        nxt.queued = promoted
        nxt.size = len(promoted)
        self.current = rung_index + 1
        logger.debug(
            f"Bracket {self.bracket_id}: promoted {promoted} to budget {nxt.budget}"
        )
        return promoted

    def truncate(self) -> None:
        self.truncated = True


class HyperbandScheduler:
    """Hands out jobs bracket by bracket, cycling through the HyperBand plans."""

    def __init__(self, plans: list[BracketPlan], eta: int, n_iterations: int):
        if n_iterations < 1:
            raise ValueError("n_iterations must be positive")
        self.plans = plans
        self.eta = eta
        self.n_iterations = n_iterations
        self.brackets: list[BracketState] = []
        self._stopped = False

    @property
    def current(self) -> BracketState | None:
        return self.brackets[-1] if self.brackets else None

    @property
    def stopped(self) -> bool:
        return self._stopped

    @property
    def exhausted(self) -> bool:
        """True once every bracket has finished and no more may start."""
        done = self._stopped or len(self.brackets) >= self.n_iterations
        return done and (self.current is None or self.current.finished)

    def bracket(self, bracket_id: int) -> BracketState:
        return self.brackets[bracket_id]

    def stop(self) -> None:
        """Start no further brackets; the open one is truncated once drained."""
        self._stopped = True

    def next_job(self) -> JobSpec:
        """
        Next actionable work item.

        Raises
        ------
        NoWorkAvailableError
            When every open slot waits on in-flight results, or all brackets are done.
        """
        bracket = self.current
        if bracket is None or bracket.finished:
            if self._stopped or len(self.brackets) >= self.n_iterations:
                raise NoWorkAvailableError("all brackets are finished")
            bracket_id = len(self.brackets)
            plan = self.plans[bracket_id % len(self.plans)]
            bracket = BracketState(bracket_id, plan, self.eta)
            self.brackets.append(bracket)
            logger.info(
                f"Starting bracket {bracket_id} (s={plan.s}): {plan.n0} config(s) "
                f"at budgets {list(plan.budgets)}"
            )
        if self._stopped:
            raise NoWorkAvailableError("stopped; draining in-flight jobs")
        job = bracket.next_job()
        if job is None:
            raise NoWorkAvailableError("waiting for in-flight results")
        return job
