"""BOHB: KDE-guided sampling inside HyperBand brackets, and the fmin entry point."""

import logging
import math
import numbers
import time
from concurrent.futures import FIRST_COMPLETED, BrokenExecutor, wait
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from src.design_space import (
    Configuration,
    DesignSpace,
    encode_many,
    ensure_valid,
    from_unit_vector,
    sample_configuration,
)
from src.optimizer.config import OptimizerConfig
from src.optimizer.kde import (
    KdeBudgetModel,
    NotEnoughObservationsError,
    fit_budget_model,
    propose,
    select_model_budget,
)
from src.optimizer.scheduler import (
    HyperbandScheduler,
    JobKind,
    JobSpec,
    NoWorkAvailableError,
    budgets_of,
    plan_hyperband,
    plan_successive_halving,
)
from src.optimizer.workers import Objective, WorkerPool
from src.run_history import NoMaxBudgetRecordError, RunHistory, TrialRecord, TrialStatus

logger = logging.getLogger(__name__)


class ObjectiveError(RuntimeError):
    """Every trial of a rung failed."""

    pass


@dataclass(frozen=True)
class BudgetData:
    """Successful observations at one budget."""

    vectors: np.ndarray
    losses: np.ndarray
    config_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.losses)


def trial_seed(run_seed: int, config_id: int, budget: float) -> int:
    """Evaluation seed derived from (run seed, config id, budget)."""
    entropy = [int(run_seed) & 0xFFFFFFFF, int(config_id), int(round(budget * 1_000_000))]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def default_config_seed(run_seed: int) -> int:
    """Seed for the one-off evaluation of the default configuration."""
    entropy = [int(run_seed) & 0xFFFFFFFF, 0xFFFFFFFF]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def collect_budget_data(history: RunHistory) -> dict[float, BudgetData]:
    data = {}
    for budget in history.budget_set:
        records = history.records_at_budget(budget)
        vectors, _ = encode_many(history.space, [r.config for r in records])
        data[budget] = BudgetData(
            vectors=vectors,
            losses=np.array([r.loss for r in records], dtype=float),
            config_ids=np.array([r.config_id for r in records], dtype=int),
        )
    return data


def get_config(
    space: DesignSpace,
    budget: float,
    per_budget_data: dict[float, BudgetData],
    rng: np.random.Generator,
    config: OptimizerConfig,
    model_cache: dict | None = None,
) -> tuple[Configuration, bool]:
    """
    Suggest the next configuration to start at ``budget``.

    With probability ``rho``, or while no budget has enough observations, the
    configuration is sampled at random; otherwise it is the density-ratio
    proposal of the model on the largest well-populated budget.

    Returns
    -------
    tuple
        ``(configuration, from_model)``.
    """
    if budget not in per_budget_data:
        raise ValueError(f"budget {budget} is not declared")

    interleave = rng.random() < config.rho
    if not interleave:
        counts = {b: len(data) for b, data in per_budget_data.items()}
        model_budget = select_model_budget(counts, space.dimension)
        if model_budget is not None:
            data = per_budget_data[model_budget]
            key = (model_budget, len(data))
            model: KdeBudgetModel | None = (model_cache or {}).get(key)
            try:
                if model is None:
                    model = fit_budget_model(
                        data.vectors,
                        data.losses,
                        space,
                        model_budget,
                        config.gamma,
                        data.config_ids,
                    )
                    if model_cache is not None:
                        model_cache[key] = model
            except NotEnoughObservationsError as e:
                logger.debug(f"Model at budget {model_budget} unavailable: {e}")
            else:
                vector = propose(model, rng, config.n_samples, config.bandwidth_factor)
                suggestion = from_unit_vector(space, vector)
                ensure_valid(space, suggestion)
                return suggestion, True

    return sample_configuration(space, rng), False


class FminResult(NamedTuple):
    best_config: Configuration | None
    best_loss: float
    history: RunHistory


@dataclass
class _Dispatch:
    job: JobSpec
    config_id: int
    config: Configuration
    seed: int
    worker_id: int
    submitted: float
    sequence: int
    generation: int = 0


class BOHB:
    """
    Event loop combining the KDE model with HyperBand scheduling.

    One logical thread owns the scheduler, the history and the models;
    workers only evaluate the objective.
    """

    def __init__(
        self,
        space: DesignSpace,
        objective: Objective,
        config: OptimizerConfig,
        history: RunHistory | None = None,
    ):
        self.space = space
        self.objective = objective
        self.config = config

        plan = plan_successive_halving if config.brackets == "sh" else plan_hyperband
        budget_set = sorted(config.budgets) if config.budgets else None
        self.plans = plan(config.b_min, config.b_max, config.eta, budget_set)
        self.budgets = budget_set or budgets_of(self.plans)

        self.history = history if history is not None else RunHistory(space, self.budgets)
        self.scheduler = HyperbandScheduler(self.plans, config.eta, config.n_iterations)
        self.rng = np.random.default_rng(config.seed)

        self.configs: dict[int, Configuration] = {}
        self.model_calls = 0
        self._model_cache: dict = {}
        self._next_config_id = 0
        self._best_loss = math.inf

    # ---------- suggestions ----------

    def get_config(self, budget: float) -> Configuration:
        data = collect_budget_data(self.history)
        suggestion, from_model = get_config(
            self.space, budget, data, self.rng, self.config, self._model_cache
        )
        if from_model:
            self.model_calls += 1
        return suggestion

    # ---------- event loop ----------

    def _resolve(self, job: JobSpec) -> tuple[int, Configuration]:
        if job.kind == JobKind.PROMOTION:
            return job.config_id, self.configs[job.config_id]
        config = self.get_config(job.budget)
        config_id = self._next_config_id
        self._next_config_id += 1
        self.configs[config_id] = config
        self.scheduler.bracket(job.bracket_id).register(job, config_id)
        return config_id, config

    def _apply(self, dispatch: _Dispatch, loss, elapsed: float, now: float, error) -> float:
        """Append the result to the history and advance the bracket; returns the new clock."""
        job = dispatch.job
        ok = error is None
        numeric = isinstance(loss, numbers.Real) and not isinstance(loss, bool)
        if ok and not (numeric and math.isfinite(loss)):
            ok, error = False, f"objective returned a non-finite or non-numeric loss {loss!r}"
        if not ok:
            logger.warning(
                f"Trial of config {dispatch.config_id} at budget {job.budget} failed: {error}"
            )

        if self.config.clock == "virtual":
            duration = float(job.budget)
            finished = max(now, dispatch.submitted + duration)
        else:
            duration = float(elapsed)
            finished = max(now, dispatch.submitted)

        record = TrialRecord(
            config_id=dispatch.config_id,
            bracket_id=job.bracket_id,
            budget=self.history.canonical_budget(job.budget),
            config=dispatch.config,
            loss=float(loss) if ok else None,
            status=TrialStatus.OK if ok else TrialStatus.FAILED,
            duration=duration,
            submitted_at=dispatch.submitted,
            finished_at=finished,
            seed=dispatch.seed,
        )
        self.history.append(record)
        logger.debug(
            f"Result config={dispatch.config_id} budget={job.budget} "
            f"loss={record.loss} worker={dispatch.worker_id}"
        )

        if ok and math.isclose(job.budget, self.history.max_budget) and loss < self._best_loss:
            self._best_loss = float(loss)
            logger.info(f"New incumbent: config {dispatch.config_id} with loss {loss:.6g}")

        bracket = self.scheduler.bracket(job.bracket_id)
        bracket.report(job.rung, dispatch.config_id, float(loss) if ok else math.inf)
        rung = bracket.rungs[job.rung]
        if rung.is_complete and all(math.isinf(v) for v in rung.completed.values()):
            raise ObjectiveError(
                f"all {rung.size} trial(s) of bracket {job.bracket_id}, rung {job.rung} "
                f"(budget {job.budget}) failed"
            )
        return finished

    def _clock(self, start: float, virtual_now: float) -> float:
        if self.config.clock == "virtual":
            return virtual_now
        return time.monotonic() - start

    def run(self) -> RunHistory:
        """Run until the iterations or the wall-clock limit are exhausted."""
        cfg = self.config
        start = time.monotonic()
        virtual_now = 0.0
        in_flight: dict = {}
        free_workers = list(range(cfg.n_workers))
        sequence = 0

        logger.info(
            f"Starting BOHB: {cfg.n_iterations} bracket(s), budgets {self.budgets}, "
            f"eta={cfg.eta}, {cfg.n_workers} worker(s), seed={cfg.seed}"
        )

        with WorkerPool(cfg.n_workers, cfg.pool) as pool:
            while True:
                elapsed = time.monotonic() - start
                if cfg.wall_clock_limit is not None and elapsed >= cfg.wall_clock_limit:
                    if not self.scheduler.stopped:
                        logger.warning(
                            f"Wall-clock limit of {cfg.wall_clock_limit}s reached; "
                            "finishing in-flight trials"
                        )
                    self.scheduler.stop()

                while free_workers:
                    try:
                        job = self.scheduler.next_job()
                    except NoWorkAvailableError:
                        break
                    config_id, config = self._resolve(job)
                    seed = trial_seed(cfg.seed, config_id, job.budget)
                    worker_id = free_workers.pop(0)
                    submitted = self._clock(start, virtual_now)
                    future = pool.submit(self.objective, config, job.budget, seed)
                    in_flight[future] = _Dispatch(
                        job, config_id, config, seed, worker_id, submitted, sequence,
                        pool.generation,
                    )
                    sequence += 1
                    logger.debug(
                        f"Dispatched config {config_id} at budget {job.budget} "
                        f"to worker {worker_id}"
                    )

                if not in_flight:
                    current = self.scheduler.current
                    if current is not None and not current.finished:
                        logger.warning(f"Bracket {current.bracket_id} truncated")
                        current.truncate()
                    break

                timeout = None
                if cfg.wall_clock_limit is not None and not self.scheduler.stopped:
                    timeout = max(cfg.wall_clock_limit - (time.monotonic() - start), 0.0)
                done, _ = wait(list(in_flight), timeout=timeout, return_when=FIRST_COMPLETED)

                crashed = False
                for future in sorted(done, key=lambda f: in_flight[f].sequence):
                    dispatch = in_flight.pop(future)
                    loss, took, error = None, 0.0, None
                    try:
                        loss, took = future.result()
                    except BrokenExecutor as e:
                        # futures of an executor that was already replaced are stale
                        crashed = crashed or dispatch.generation == pool.generation
                        error = f"worker crashed ({e})"
                    except Exception as e:  # objective failures become FAILED trials
                        error = f"{type(e).__name__}: {e}"
                    virtual_now = self._apply(
                        dispatch, loss, took, self._clock(start, virtual_now), error
                    )
                    free_workers.append(dispatch.worker_id)
                free_workers.sort()
                if crashed:
                    pool.restart()

        n_failed = len(self.history.failed())
        logger.info(
            f"BOHB finished: {len(self.history)} trial(s), {n_failed} failed, "
            f"{len(self.scheduler.brackets)} bracket(s)"
        )
        return self.history

    def result(self) -> FminResult:
        try:
            best = self.history.incumbent()
        except NoMaxBudgetRecordError:
            logger.warning("No successful evaluation at the maximum budget")
            return FminResult(None, math.inf, self.history)
        return FminResult(best.config, best.loss, self.history)


def fmin(
    objective: Objective,
    space: DesignSpace,
    budget_spec: tuple[float, float] | None = None,
    optimizer_config: OptimizerConfig | None = None,
    **overrides,
) -> FminResult:
    """
    Minimise ``objective`` over ``space`` with BOHB.

    Parameters
    ----------
    objective : callable
        ``objective(config, budget, seed) -> loss``; exceptions mark the trial FAILED.
    space : DesignSpace
        The search space.
    budget_spec : (float, float), optional
        ``(b_min, b_max)``; overrides the values in ``optimizer_config``.
    optimizer_config : OptimizerConfig, optional
        Defaults to ``OptimizerConfig()``.
    **overrides
        Individual OptimizerConfig fields, e.g. ``n_iterations=12, seed=0``.

    Returns
    -------
    FminResult
        ``(best_config, best_loss, history)``; the incumbent is the best
        configuration at the highest budget.

    Raises
    ------
    ConfigurationError
        If the resulting OptimizerConfig is invalid.
    ObjectiveError
        If every trial of some rung failed.
    """
    config = optimizer_config or OptimizerConfig()
    if budget_spec is not None:
        overrides = {"b_min": budget_spec[0], "b_max": budget_spec[1], **overrides}
    if overrides:
        config = replace(config, **overrides)

    optimizer = BOHB(space, objective, config)
    optimizer.run()
    return optimizer.result()
