"""Objective wrappers and the local worker pool."""

import json
import logging
import subprocess
import time
from collections.abc import Callable, Sequence
from concurrent.futures import (
    BrokenExecutor,
    Executor,
    Future,
    ProcessPoolExecutor,
    ThreadPoolExecutor,
)

from src.design_space import Configuration

logger = logging.getLogger(__name__)

Objective = Callable[[Configuration, float, int], float]


class TrialFailure(RuntimeError):
    """An objective evaluation did not produce a usable loss."""

    pass


class CommandObjective:
    """
    Evaluate configurations in a child process.

    The child receives ``{"config": {...}, "budget": float, "seed": int}`` on
    stdin and must print ``{"loss": float}`` on stdout. A nonzero exit code,
    malformed output or an exceeded timeout fails the trial.
    """

    def __init__(self, argv: Sequence[str], timeout: float | None = None):
        if not argv:
            raise ValueError("command must not be empty")
        self.argv = list(argv)
        self.timeout = timeout

    def __call__(self, config: Configuration, budget: float, seed: int) -> float:
        payload = json.dumps({"config": dict(config.values), "budget": budget, "seed": seed})
        try:
            proc = subprocess.run(
                self.argv,
                input=payload,
                capture_output=True,
                text=True,
                timeout=self.timeout,
                check=False,
            )
        except subprocess.TimeoutExpired as e:
            raise TrialFailure(f"objective exceeded {self.timeout}s") from e
        except OSError as e:
            raise TrialFailure(f"could not start objective: {e}") from e

        if proc.returncode != 0:
            raise TrialFailure(
                f"objective exited with code {proc.returncode}: {proc.stderr.strip()[-200:]}"
            )
        try:
            loss = json.loads(proc.stdout.strip().splitlines()[-1])["loss"]
        except (IndexError, KeyError, TypeError, json.JSONDecodeError) as e:
            raise TrialFailure(f"malformed objective output: {proc.stdout[:200]!r}") from e
        if isinstance(loss, bool) or not isinstance(loss, int | float):
            raise TrialFailure(f"loss must be a number, got {loss!r}")
        return float(loss)


def run_trial(objective: Objective, config: Configuration, budget: float, seed: int):
    """Evaluate once and time it; runs inside a worker."""
    start = time.perf_counter()
    loss = objective(config, budget, seed)
    return loss, time.perf_counter() - start


class WorkerPool:
    """A fixed number of local workers (threads or processes).

    A process pool that breaks because a worker died is replaced by a fresh
    one through :meth:`restart`. ``generation`` counts the replacements, so a
    future can be matched to the executor that produced it.
    """

    def __init__(self, n_workers: int, kind: str = "thread"):
        if n_workers < 1:
            raise ValueError("n_workers must be positive")
        self.n_workers = n_workers
        self.kind = kind
        self.generation = 0
        self._executor = self._create()

    def _create(self) -> Executor:
        if self.kind == "process":
            return ProcessPoolExecutor(max_workers=self.n_workers)
        return ThreadPoolExecutor(max_workers=self.n_workers, thread_name_prefix="boah-worker")

    def submit(
        self, objective: Objective, config: Configuration, budget: float, seed: int
    ) -> Future:
        try:
            return self._executor.submit(run_trial, objective, config, budget, seed)
        except BrokenExecutor:
            # a worker died since the last wait
            self.restart()
            return self._executor.submit(run_trial, objective, config, budget, seed)

    def restart(self) -> None:
        logger.warning(f"Restarting {self.kind} worker pool after a worker crash")
        self._executor.shutdown(wait=False, cancel_futures=True)
        self._executor = self._create()
        self.generation += 1

    def shutdown(self, cancel: bool = False) -> None:
        self._executor.shutdown(wait=not cancel, cancel_futures=cancel)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, *exc):
        self.shutdown(cancel=exc_type is not None)
