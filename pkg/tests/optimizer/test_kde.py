"""Unit tests for src.optimizer.kde."""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.design_space import Hyperparameter, HyperparameterKind, build_space
from src.optimizer import (
    DimensionMismatchError,
    EmptyPointSetError,
    KdeBudgetModel,
    ModelNotFittedError,
    NotEnoughObservationsError,
    density,
    fit_budget_model,
    fit_kde,
    propose,
    select_model_budget,
    split_good_bad,
)
from src.optimizer.kde import MIN_BANDWIDTH, density_many, sample_from_kde


@pytest.fixture
def line_space():
    return build_space([Hyperparameter("x", HyperparameterKind.CONTINUOUS, lower=0.0, upper=1.0)])


@pytest.fixture
def choice_space():
    return build_space(
        [Hyperparameter("c", HyperparameterKind.CATEGORICAL, choices=("a", "b", "c", "d"))]
    )


@pytest.fixture
def mixed_space():
    return build_space(
        [
            Hyperparameter("x", HyperparameterKind.CONTINUOUS, lower=0.0, upper=1.0),
            Hyperparameter("c", HyperparameterKind.CATEGORICAL, choices=("a", "b", "c")),
        ]
    )


# ─────────────────────────────────────────────────────────────────────────────
# Tests for split_good_bad
# ─────────────────────────────────────────────────────────────────────────────


class TestSplitGoodBad:
    """Test the good/bad split of observations."""

    def test_good_size_uses_minimum_points(self):
        losses = np.arange(20, dtype=float)
        split = split_good_bad(losses, gamma=0.15, d=3)
        assert len(split.good_indices) == 4
        assert len(split.bad_indices) == 16
        assert sorted(split.good_indices.tolist()) == [0, 1, 2, 3]

    def test_too_few_observations(self):
        with pytest.raises(NotEnoughObservationsError, match="need at least 8"):
            split_good_bad(np.arange(7, dtype=float), gamma=0.15, d=3)

    def test_ties_go_to_earlier_ids(self):
        split = split_good_bad(np.ones(10), gamma=0.15, d=1, config_ids=np.arange(10))
        assert split.good_indices.tolist() == [0, 1]

    def test_ties_broken_by_config_id_not_position(self):
        ids = np.array([9, 3, 7, 1, 5, 0, 8, 2, 6, 4])
        split = split_good_bad(np.ones(10), gamma=0.15, d=1, config_ids=ids)
        assert sorted(ids[split.good_indices].tolist()) == [0, 1]

    def test_bad_set_keeps_minimum_points(self):
        split = split_good_bad(np.arange(8, dtype=float), gamma=0.9, d=3)
        assert len(split.bad_indices) == 4

    def test_large_gamma_fraction(self):
        split = split_good_bad(np.arange(100, dtype=float), gamma=0.15, d=1)
        assert len(split.good_indices) == 15

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            split_good_bad(np.arange(10, dtype=float), gamma=1.0, d=1)


class TestSelectModelBudget:
    """Test which budget feeds the model."""

    @pytest.mark.parametrize(
        "counts,d,expected",
        [
            ({1: 30, 3: 6, 9: 2}, 2, 3),
            ({1: 0, 3: 0, 9: 0}, 2, None),
            ({1: 100}, 2, 1),
            ({1: 4, 3: 4}, 1, 3),
        ],
        ids=["largest_qualifying", "cold_start", "single_budget", "both_qualify"],
    )
    def test_examples(self, counts, d, expected):
        assert select_model_budget(counts, d) == expected


# ─────────────────────────────────────────────────────────────────────────────
# Tests for fit_kde and density
# ─────────────────────────────────────────────────────────────────────────────


class TestKdeDensity:
    """Test fitting and evaluating the product-kernel KDE."""

    def test_numeric_density_integrates_to_one(self, line_space):
        rng = np.random.default_rng(0)
        kde = fit_kde(rng.random((15, 1)), line_space)
        grid = np.linspace(0.0, 1.0, 20001)
        values = density_many(kde, grid[:, None])
        assert trapezoid(values, grid) == pytest.approx(1.0, abs=1e-2)

    def test_categorical_masses_sum_to_one(self, choice_space):
        points = np.array([[0.125], [0.125], [0.625], [0.875]])
        kde = fit_kde(points, choice_space)
        centres = (np.arange(4) + 0.5) / 4
        masses = [density(kde, [c]) for c in centres]
        assert sum(masses) == pytest.approx(1.0, abs=1e-12)
        assert masses[0] == max(masses)

    def test_symmetric_points_give_symmetric_density(self, line_space):
        kde = fit_kde(np.array([[0.2], [0.8], [0.4], [0.6], [0.1], [0.9]]), line_space)
        for x in np.linspace(0.0, 1.0, 41):
            assert density(kde, [x]) == pytest.approx(density(kde, [1.0 - x]), rel=1e-9)

    def test_duplicate_points_use_floor_bandwidth(self, line_space):
        kde = fit_kde(np.full((5, 1), 0.3), line_space)
        assert kde.bandwidths[0] == MIN_BANDWIDTH
        assert np.isfinite(density(kde, [0.3]))
        assert density(kde, [0.3]) > 0

    def test_single_point(self, line_space):
        kde = fit_kde(np.array([[0.5]]), line_space)
        assert kde.bandwidths[0] == MIN_BANDWIDTH

    def test_density_is_non_negative(self, mixed_space):
        rng = np.random.default_rng(1)
        kde = fit_kde(rng.random((12, 2)), mixed_space)
        assert np.all(density_many(kde, rng.random((50, 2))) >= 0)

    def test_empty_points(self, line_space):
        with pytest.raises(EmptyPointSetError):
            fit_kde(np.empty((0, 1)), line_space)

    def test_dimension_mismatch(self, line_space, mixed_space):
        kde = fit_kde(np.array([[0.5], [0.4]]), line_space)
        with pytest.raises(DimensionMismatchError):
            density(kde, [0.5, 0.5])
        with pytest.raises(DimensionMismatchError):
            fit_kde(np.array([[0.5], [0.4]]), mixed_space)


# ─────────────────────────────────────────────────────────────────────────────
# Tests for propose
# ─────────────────────────────────────────────────────────────────────────────


class TestPropose:
    """Test the density-ratio acquisition."""

    @pytest.fixture
    def model(self, line_space):
        rng = np.random.default_rng(2)
        vectors = rng.random((30, 1))
        losses = (vectors[:, 0] - 0.2) ** 2
        return fit_budget_model(vectors, losses, line_space, budget=1.0, gamma=0.15)

    def test_proposal_is_in_unit_cube(self, model):
        rng = np.random.default_rng(0)
        for _ in range(20):
            vector = propose(model, rng, n_samples=16, bandwidth_factor=3.0)
            assert vector.shape == (1,)
            assert 0.0 <= vector[0] <= 1.0

    def test_proposals_concentrate_near_good_region(self, model):
        rng = np.random.default_rng(0)
        proposals = np.array([propose(model, rng)[0] for _ in range(50)])
        assert np.median(np.abs(proposals - 0.2)) < 0.2

    def test_single_sample_is_returned(self, model):
        expected = sample_from_kde(model.good, np.random.default_rng(9), 1, 3.0)[0]
        got = propose(model, np.random.default_rng(9), n_samples=1, bandwidth_factor=3.0)
        np.testing.assert_array_equal(got, expected)

    def test_identical_kdes_return_first_candidate(self, line_space):
        kde = fit_kde(np.random.default_rng(3).random((10, 1)), line_space)
        tied = KdeBudgetModel(budget=1.0, good=kde, bad=kde, n_obs=20)
        expected = sample_from_kde(kde, np.random.default_rng(4), 8, 3.0)[0]
        got = propose(tied, np.random.default_rng(4), n_samples=8, bandwidth_factor=3.0)
        np.testing.assert_array_equal(got, expected)

    def test_unfitted_model(self):
        with pytest.raises(ModelNotFittedError):
            propose(None, np.random.default_rng(0))
        with pytest.raises(ModelNotFittedError):
            propose(KdeBudgetModel(1.0, None, None, 0), np.random.default_rng(0))

    def test_categorical_samples_land_on_bin_centres(self, mixed_space):
        rng = np.random.default_rng(5)
        vectors = rng.random((20, 2))
        model = fit_budget_model(vectors, vectors[:, 0], mixed_space, budget=1.0)
        samples = sample_from_kde(model.good, rng, 100, 3.0)
        assert set(np.round(samples[:, 1] * 3 - 0.5, 9)) <= {0.0, 1.0, 2.0}
