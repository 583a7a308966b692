"""Unit tests for src.analysis.correlation."""

import math

import numpy as np
import pytest
from scipy.stats import rankdata

from src.analysis import rank_correlation_matrix, spearman_from_losses, spearman_rank_correlation
from src.design_space import Hyperparameter, HyperparameterKind, build_space
from src.run_history import RunHistory, TrialRecord, TrialStatus, UnknownBudgetError


@pytest.fixture
def space():
    return build_space([Hyperparameter("x", HyperparameterKind.CONTINUOUS, lower=0.0, upper=1.0)])


def make_history(space, rows, budgets=(1.0, 3.0, 9.0)):
    """``rows`` holds (config_id, budget, loss); a loss of None marks a failure."""
    history = RunHistory(space, budgets)
    for t, (config_id, budget, loss) in enumerate(rows):
        status = TrialStatus.OK if loss is not None else TrialStatus.FAILED
        config = space.make_configuration({"x": (config_id % 10) / 10})
        history.append(
            TrialRecord(config_id, 0, budget, config, loss, status, budget, t, t + budget, 0)
        )
    return history


def paired(space, losses_a, losses_b, budget_a=1.0, budget_b=3.0):
    rows = [(i, budget_a, a) for i, a in enumerate(losses_a)]
    rows += [(i, budget_b, b) for i, b in enumerate(losses_b)]
    return make_history(space, rows)


# ─────────────────────────────────────────────────────────────────────────────
# Tests for spearman_rank_correlation
# ─────────────────────────────────────────────────────────────────────────────


class TestSpearman:
    """Test Spearman's rho between two budgets."""

    def test_identical_ranking(self, space):
        history = paired(space, [1, 2, 3], [2, 4, 6])
        assert spearman_rank_correlation(history, 1.0, 3.0) == pytest.approx(1.0)

    def test_reversed_ranking(self, space):
        history = paired(space, [1, 2, 3], [6, 4, 2])
        assert spearman_rank_correlation(history, 1.0, 3.0) == pytest.approx(-1.0)

    def test_ties_match_rank_pearson_oracle(self, space):
        a, b = [1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 2.0, 4.0]
        oracle = np.corrcoef(rankdata(a), rankdata(b))[0, 1]
        history = paired(space, a, b)
        assert spearman_rank_correlation(history, 1.0, 3.0) == pytest.approx(oracle, abs=1e-12)

    def test_random_losses_match_oracle(self):
        rng = np.random.default_rng(0)
        a = rng.integers(0, 5, size=25).astype(float)
        b = a + rng.integers(0, 3, size=25)
        oracle = np.corrcoef(rankdata(a), rankdata(b))[0, 1]
        assert spearman_from_losses(a, b) == pytest.approx(oracle, abs=1e-12)

    def test_tied_sets_match_oracle(self):
        rng = np.random.default_rng(14)
        checked = 0
        for _ in range(1000):
            n = int(rng.integers(3, 40))
            a = rng.integers(0, int(rng.integers(2, 8)), size=n).astype(float)
            b = a * rng.integers(0, 2) + rng.integers(0, 4, size=n)
            rho = spearman_from_losses(a, b)
            if np.all(a == a[0]) or np.all(b == b[0]):
                assert rho is None
                continue
            oracle = np.corrcoef(rankdata(a), rankdata(b))[0, 1]
            assert rho == pytest.approx(oracle, abs=1e-12)
            checked += 1
        assert checked > 900

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        a, b = rng.random(15), rng.random(15)
        assert spearman_from_losses(a, b) == pytest.approx(spearman_from_losses(a, np.exp(3 * b)))

    def test_symmetric(self, space):
        history = paired(space, [1, 5, 2, 4], [3, 1, 2, 4])
        assert spearman_rank_correlation(history, 1.0, 3.0) == pytest.approx(
            spearman_rank_correlation(history, 3.0, 1.0)
        )

    @pytest.mark.parametrize(
        "losses_a,losses_b",
        [([1, 2], [1, 2]), ([1, 1, 1], [1, 2, 3]), ([1, 2, 3], [5, 5, 5])],
        ids=["two_pairs", "constant_a", "constant_b"],
    )
    def test_undefined(self, space, losses_a, losses_b):
        assert spearman_rank_correlation(paired(space, losses_a, losses_b), 1.0, 3.0) is None

    def test_pairs_by_config_id_and_averages_repeats(self, space):
        rows = [(0, 1.0, 1.0), (1, 1.0, 2.0), (2, 1.0, 3.0), (3, 1.0, 4.0)]
        # config 0 is evaluated twice at budget 3; config 3 never
        rows += [(0, 3.0, 9.0), (0, 3.0, 1.0), (1, 3.0, 6.0), (2, 3.0, 7.0)]
        history = make_history(space, rows)
        # config 0 averages to 5.0, so the budget-3 ranking is 0 < 1 < 2
        assert spearman_rank_correlation(history, 1.0, 3.0) == pytest.approx(1.0)

    def test_failed_records_are_ignored(self, space):
        rows = [(i, 1.0, float(i)) for i in range(4)]
        rows += [(0, 3.0, 0.0), (1, 3.0, 1.0), (2, 3.0, 2.0), (3, 3.0, None)]
        assert spearman_rank_correlation(make_history(space, rows), 1.0, 3.0) == pytest.approx(1.0)

    def test_unknown_budget(self, space):
        with pytest.raises(UnknownBudgetError):
            spearman_rank_correlation(paired(space, [1, 2, 3], [1, 2, 3]), 1.0, 5.0)

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            spearman_from_losses([1, 2, 3], [1, 2])


class TestRankCorrelationMatrix:
    """Test the all-pairs matrix."""

    def test_only_top_budget_records(self, space):
        history = make_history(space, [(i, 9.0, float(i)) for i in range(5)])
        matrix = rank_correlation_matrix(history)
        assert list(matrix.index) == [1.0, 3.0, 9.0]
        assert matrix.loc[9.0, 9.0] == pytest.approx(1.0)
        off_diagonal = [matrix.loc[a, b] for a in matrix.index for b in matrix.columns if a != b]
        assert all(math.isnan(v) for v in off_diagonal)

    def test_symmetric_values(self, space):
        rows = [(i, 1.0, float(i)) for i in range(5)]
        rows += [(i, 3.0, float(4 - i)) for i in range(5)]
        matrix = rank_correlation_matrix(make_history(space, rows))
        assert matrix.loc[1.0, 3.0] == pytest.approx(-1.0)
        assert matrix.loc[3.0, 1.0] == pytest.approx(-1.0)
        np.testing.assert_array_equal(matrix.to_numpy(), matrix.to_numpy().T)

    def test_subset_of_budgets(self, space):
        rows = [(i, 1.0, float(i)) for i in range(5)] + [(i, 3.0, float(i)) for i in range(5)]
        matrix = rank_correlation_matrix(make_history(space, rows), [1.0, 3.0])
        assert matrix.shape == (2, 2)
        assert matrix.to_numpy() == pytest.approx(np.ones((2, 2)))
