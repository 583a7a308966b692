"""Unit tests for src.optimizer.bohb."""

import functools
import io
import math
import os
import threading
import time

import numpy as np
import pytest

from src.design_space import Hyperparameter, HyperparameterKind, build_space, check_validity
from src.optimizer import (
    BOHB,
    BudgetData,
    ConfigurationError,
    ObjectiveError,
    OptimizerConfig,
    collect_budget_data,
    default_config_seed,
    fmin,
    get_config,
    trial_seed,
)
from src.run_history import TrialStatus, serialize


@pytest.fixture
def space():
    return build_space(
        [Hyperparameter("x", HyperparameterKind.CONTINUOUS, lower=0.0, upper=1.0, default=0.0)]
    )


def sphere(config, budget, seed):
    return (config["x"] - 0.5) ** 2


def noisy_sphere(config, budget, seed):
    noise = np.random.default_rng(seed).normal(0.0, 0.1, size=max(1, round(budget))).mean()
    return (config["x"] - 0.5) ** 2 + float(noise)


def exit_on_first_call(marker, config, budget, seed):
    try:
        os.close(os.open(marker, os.O_CREAT | os.O_EXCL))
    except FileExistsError:
        return sphere(config, budget, seed)
    os._exit(1)


def _budget_data(vectors, losses):
    vectors = np.asarray(vectors, dtype=float).reshape(len(losses), -1)
    return BudgetData(vectors, np.asarray(losses, dtype=float), np.arange(len(losses)))


# ─────────────────────────────────────────────────────────────────────────────
# Tests for get_config
# ─────────────────────────────────────────────────────────────────────────────


class TestGetConfig:
    """Test the choice between random sampling and the model."""

    @pytest.fixture
    def empty(self):
        return {b: _budget_data(np.empty((0, 1)), []) for b in (1.0, 3.0, 9.0)}

    @pytest.fixture
    def rich(self, empty):
        xs = np.linspace(0.02, 0.98, 30)
        return {**empty, 1.0: _budget_data(xs, (xs - 0.5) ** 2)}

    def test_cold_start_samples_randomly(self, space, empty):
        config, from_model = get_config(
            space, 1.0, empty, np.random.default_rng(0), OptimizerConfig(rho=0.0)
        )
        assert from_model is False
        assert check_validity(space, config) == []

    def test_rho_one_never_uses_model(self, space, rich):
        rng = np.random.default_rng(0)
        for _ in range(20):
            _, from_model = get_config(space, 9.0, rich, rng, OptimizerConfig(rho=1.0))
            assert from_model is False

    def test_rho_zero_uses_budget_one_model(self, space, rich):
        rng = np.random.default_rng(0)
        cache = {}
        for _ in range(5):
            config, from_model = get_config(
                space, 9.0, rich, rng, OptimizerConfig(rho=0.0), cache
            )
            assert from_model is True
            assert check_validity(space, config) == []
        assert list(cache) == [(1.0, 30)]

    def test_undeclared_budget(self, space, empty):
        with pytest.raises(ValueError, match="not declared"):
            get_config(space, 2.0, empty, np.random.default_rng(0), OptimizerConfig())

    def test_same_seed_same_suggestion(self, space, rich):
        cfg = OptimizerConfig(rho=0.0)
        a, _ = get_config(space, 1.0, rich, np.random.default_rng(7), cfg)
        b, _ = get_config(space, 1.0, rich, np.random.default_rng(7), cfg)
        assert a == b


class TestSeeds:
    """Test derivation of per-trial seeds."""

    def test_trial_seed_is_deterministic(self):
        assert trial_seed(0, 5, 3.0) == trial_seed(0, 5, 3.0)

    def test_trial_seed_depends_on_inputs(self):
        seeds = {trial_seed(0, 5, 3.0), trial_seed(1, 5, 3.0), trial_seed(0, 6, 3.0)}
        seeds.add(trial_seed(0, 5, 9.0))
        assert len(seeds) == 4

    def test_default_seed_differs_from_trial_seeds(self):
        assert default_config_seed(0) not in {trial_seed(0, i, 9.0) for i in range(10)}


# ─────────────────────────────────────────────────────────────────────────────
# Tests for fmin and the event loop
# ─────────────────────────────────────────────────────────────────────────────


class TestFmin:
    """Test end-to-end optimization on cheap objectives."""

    def test_improves_over_default(self, space):
        best_config, best_loss, history = fmin(sphere, space, (1, 9), n_iterations=12, seed=0)
        assert best_loss <= 0.25
        assert best_config is not None
        assert best_loss == min(r.loss for r in history.records_at_budget(9.0))

    def test_budget_accounting_of_one_iteration(self, space):
        _, _, history = fmin(sphere, space, (1, 9), n_iterations=3, seed=0)
        assert len(history) == (9 + 3 + 1) + (5 + 1) + 3
        assert sum(r.budget for r in history) == 27 + 24 + 27
        assert [r.bracket_id for r in history][-3:] == [2, 2, 2]

    def test_promoted_configs_keep_their_id(self, space):
        _, _, history = fmin(sphere, space, (1, 9), n_iterations=1, seed=0)
        by_budget = {b: [r.config_id for r in history.records_at_budget(b)] for b in (1, 3, 9)}
        assert len(by_budget[1.0]) == 9
        assert set(by_budget[3.0]) <= set(by_budget[1.0])
        assert set(by_budget[9.0]) <= set(by_budget[3.0])
        losses_at_one = {r.config_id: r.loss for r in history.records_at_budget(1.0)}
        best_three = sorted(losses_at_one, key=lambda cid: (losses_at_one[cid], cid))[:3]
        assert sorted(by_budget[3.0]) == sorted(best_three)

    def test_single_budget_mode(self, space):
        best_config, best_loss, history = fmin(sphere, space, (9, 9), n_iterations=1, seed=0)
        assert len(history) == 1
        assert history.budget_set == [9.0]
        assert best_loss == history.records[0].loss

    def test_always_failing_objective(self, space):
        def broken(config, budget, seed):
            raise RuntimeError("boom")

        with pytest.raises(ObjectiveError):
            fmin(broken, space, (1, 9), n_iterations=1, seed=0)

    def test_partial_rung_failure_still_promotes(self, space):
        calls = {"n": 0}
        lock = threading.Lock()

        def flaky_start(config, budget, seed):
            with lock:
                calls["n"] += 1
                first_seven = calls["n"] <= 7
            if first_seven:
                raise RuntimeError("worker not ready")
            return sphere(config, budget, seed)

        best_config, _, history = fmin(
            flaky_start, space, (1, 9), n_iterations=1, n_workers=1, rho=1.0, seed=0
        )
        assert len(history) == 12
        assert len(history.failed()) == 7
        assert [len(history.records_at_budget(b)) for b in (1.0, 3.0, 9.0)] == [2, 2, 1]
        assert best_config is not None

    def test_non_finite_loss_fails_trial(self, space):
        def nan_on_low_budget(config, budget, seed):
            return math.nan if config["x"] < 0.4 and budget == 1 else sphere(config, budget, seed)

        _, _, history = fmin(nan_on_low_budget, space, (1, 9), n_iterations=7, rho=1.0, seed=0)
        failed = history.failed()
        assert failed
        assert all(r.status == TrialStatus.FAILED and r.loss is None for r in failed)
        failed_ids = {r.config_id for r in failed}
        promoted = {r.config_id for r in history if r.budget > 1}
        assert not failed_ids & promoted

    def test_process_pool_survives_a_dead_worker(self, space, tmp_path):
        marker = tmp_path / "exited"
        objective = functools.partial(exit_on_first_call, str(marker))
        _, best_loss, history = fmin(
            objective, space, (1, 9), n_iterations=1, n_workers=2, pool="process", seed=0
        )
        assert marker.exists()
        # the dead worker and at most one neighbour lose their trial
        assert 1 <= len(history.failed()) <= 2
        assert len(history) == 13
        assert len(history.records_at_budget(9.0)) == 1
        assert math.isfinite(best_loss)

    def test_rho_one_makes_no_model_calls(self, space):
        optimizer = BOHB(space, sphere, OptimizerConfig(n_iterations=6, rho=1.0, seed=0))
        optimizer.run()
        assert optimizer.model_calls == 0

    def test_model_is_used_once_data_exists(self, space):
        optimizer = BOHB(space, sphere, OptimizerConfig(n_iterations=6, rho=0.0, seed=0))
        optimizer.run()
        assert optimizer.model_calls > 0

    def test_runs_are_reproducible(self, space):
        texts = []
        for _ in range(2):
            optimizer = BOHB(space, noisy_sphere, OptimizerConfig(n_iterations=6, seed=7))
            buffer = io.StringIO()
            serialize(optimizer.run(), buffer)
            texts.append(buffer.getvalue())
        assert texts[0] == texts[1]

    def test_virtual_clock_is_monotone(self, space):
        _, _, history = fmin(sphere, space, (1, 9), n_iterations=3, seed=0)
        finished = [r.finished_at for r in history]
        assert finished == sorted(finished)
        assert all(r.duration == r.budget for r in history)

    def test_worker_bound(self, space):
        lock = threading.Lock()
        state = {"running": 0, "peak": 0}

        def slow(config, budget, seed):
            with lock:
                state["running"] += 1
                state["peak"] = max(state["peak"], state["running"])
            time.sleep(0.01)
            with lock:
                state["running"] -= 1
            return sphere(config, budget, seed)

        _, _, history = fmin(slow, space, (1, 9), n_iterations=1, n_workers=3, seed=0)
        assert len(history) == 13
        assert 1 <= state["peak"] <= 3

    def test_wall_clock_limit_stops_early(self, space):
        def slow(config, budget, seed):
            time.sleep(0.02)
            return sphere(config, budget, seed)

        cfg = OptimizerConfig(n_iterations=100, wall_clock_limit=0.2, clock="wall", seed=0)
        optimizer = BOHB(space, slow, cfg)
        start = time.monotonic()
        optimizer.run()
        assert time.monotonic() - start < 10
        assert optimizer.scheduler.stopped
        assert len(optimizer.history) < 100
        assert all(b.finished for b in optimizer.scheduler.brackets)

    def test_invalid_override(self, space):
        with pytest.raises(ConfigurationError):
            fmin(sphere, space, (9, 1))

    def test_collect_budget_data(self, space):
        _, _, history = fmin(sphere, space, (1, 9), n_iterations=1, seed=0)
        data = collect_budget_data(history)
        assert [len(data[b]) for b in (1.0, 3.0, 9.0)] == [9, 3, 1]
        assert data[1.0].vectors.shape == (9, 1)
