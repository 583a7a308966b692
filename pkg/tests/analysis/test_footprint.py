"""Unit tests for src.analysis.footprint."""

import itertools
import math

import numpy as np
import pytest
from sklearn.manifold import smacof

from src.analysis import (
    MdsParams,
    SpaceMismatchError,
    build_footprint,
    gower_distance,
    gower_matrix,
    mds_footprint,
)
from src.analysis.footprint import classical_scaling, footprint_inputs, raw_stress
from src.benchmarks import conditional_space
from src.design_space import (
    Configuration,
    Hyperparameter,
    HyperparameterKind,
    build_space,
    sample_configuration,
)
from src.run_history import RunHistory, TrialRecord, TrialStatus


def _pairwise(X):
    return np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))


@pytest.fixture
def mixed_space():
    return build_space(
        [
            Hyperparameter("x", HyperparameterKind.CONTINUOUS, lower=0.0, upper=1.0),
            Hyperparameter("c", HyperparameterKind.CATEGORICAL, choices=("a", "b", "c")),
        ]
    )


# ─────────────────────────────────────────────────────────────────────────────
# Tests for gower_distance
# ─────────────────────────────────────────────────────────────────────────────


class TestGowerDistance:
    """Test the mixed-type configuration distance."""

    def test_identical(self, mixed_space):
        a = mixed_space.make_configuration({"x": 0.4, "c": "b"})
        assert gower_distance(mixed_space, a, a) == 0.0

    def test_all_categories_differ(self):
        space = build_space(
            [
                Hyperparameter("p", HyperparameterKind.CATEGORICAL, choices=("a", "b")),
                Hyperparameter("q", HyperparameterKind.CATEGORICAL, choices=("u", "v")),
            ]
        )
        a = space.make_configuration({"p": "a", "q": "u"})
        b = space.make_configuration({"p": "b", "q": "v"})
        assert gower_distance(space, a, b) == 1.0

    def test_half_of_numeric_difference(self, mixed_space):
        a = mixed_space.make_configuration({"x": 0.2, "c": "a"})
        b = mixed_space.make_configuration({"x": 0.5, "c": "a"})
        assert gower_distance(mixed_space, a, b) == pytest.approx(0.15)

    def test_ordinal_rank_distance(self):
        space = build_space(
            [Hyperparameter("w", HyperparameterKind.ORDINAL, choices=(8, 16, 32, 64, 128))]
        )
        a = space.make_configuration({"w": 8})
        b = space.make_configuration({"w": 32})
        assert gower_distance(space, a, b) == pytest.approx(0.5)

    def test_activity_rules(self):
        space = conditional_space()
        a = space.make_configuration({"branch": "a", "child_a": 0.3})
        b = space.make_configuration({"branch": "b", "child_b": 0.3})
        # branch differs, each child is active on exactly one side
        assert gower_distance(space, a, b) == pytest.approx(1.0)
        c = space.make_configuration({"branch": "a", "child_a": 0.6})
        # child_b inactive on both sides counts 0
        assert gower_distance(space, a, c) == pytest.approx(0.3 / 3)

    def test_metric_properties(self):
        space = conditional_space()
        rng = np.random.default_rng(0)
        configs = [sample_configuration(space, rng) for _ in range(12)]
        for a, b, c in itertools.combinations(configs, 3):
            ab = gower_distance(space, a, b)
            assert 0.0 <= ab <= 1.0
            assert ab == pytest.approx(gower_distance(space, b, a))
            assert gower_distance(space, a, c) <= ab + gower_distance(space, b, c) + 1e-12

    def test_metric_properties_on_random_spaces(self, random_space):
        rng = np.random.default_rng(12)
        i, j, k = np.array(list(itertools.combinations(range(6), 3))).T
        n_triples = 0
        for _ in range(500):
            space = random_space(rng, conditional=False)
            configs = [sample_configuration(space, rng) for _ in range(6)]
            D = gower_matrix(space, configs)
            assert np.all((D >= 0.0) & (D <= 1.0))
            np.testing.assert_array_equal(D, D.T)
            np.testing.assert_array_equal(np.diag(D), 0.0)
            assert np.all(D[i, k] <= D[i, j] + D[j, k] + 1e-12)
            assert np.all(D[i, j] <= D[i, k] + D[k, j] + 1e-12)
            assert np.all(D[j, k] <= D[j, i] + D[i, k] + 1e-12)
            assert gower_distance(space, configs[0], configs[1]) == pytest.approx(D[0, 1])
            n_triples += len(i)
        assert n_triples == 10_000

    def test_matrix_matches_pairwise(self):
        space = conditional_space()
        rng = np.random.default_rng(1)
        configs = [sample_configuration(space, rng) for _ in range(8)]
        matrix = gower_matrix(space, configs)
        for i, j in itertools.product(range(8), repeat=2):
            assert matrix[i, j] == pytest.approx(gower_distance(space, configs[i], configs[j]))

    def test_space_mismatch(self, mixed_space):
        a = mixed_space.make_configuration({"x": 0.2, "c": "a"})
        other = Configuration(values={"y": 0.1}, active={"y": True})
        with pytest.raises(SpaceMismatchError):
            gower_distance(mixed_space, a, other)


# ─────────────────────────────────────────────────────────────────────────────
# Tests for mds_footprint
# ─────────────────────────────────────────────────────────────────────────────


class TestMds:
    """Test the SMACOF embedding."""

    def test_equilateral_triangle(self):
        D = np.full((3, 3), 0.5) - 0.5 * np.eye(3)
        result = mds_footprint(D)
        assert result.stress <= 1e-6
        upper = _pairwise(result.coordinates)[np.triu_indices(3, 1)]
        np.testing.assert_allclose(upper, 0.5, atol=1e-3)
        assert not result.degenerate

    def test_points_on_a_line(self):
        index = np.arange(4)
        D = np.abs(index[:, None] - index[None, :]) / 3
        result = mds_footprint(D)
        assert result.stress <= 1e-6
        assert result.coordinates.shape == (4, 2)

    def test_all_zero_is_degenerate(self):
        result = mds_footprint(np.zeros((4, 4)))
        assert result.degenerate
        np.testing.assert_array_equal(result.coordinates, np.zeros((4, 2)))

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_stress_never_increases(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.random((15, 15))
        D = (A + A.T) / 2
        np.fill_diagonal(D, 0.0)
        history = mds_footprint(D, MdsParams(max_iter=100, tol=0.0)).stress_history
        assert len(history) > 1
        assert all(later <= earlier for earlier, later in zip(history, history[1:]))

    def test_stress_never_increases_on_random_matrices(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(3, 21))
            A = rng.random((n, n))
            D = (A + A.T) / 2
            np.fill_diagonal(D, 0.0)
            result = mds_footprint(D, MdsParams(max_iter=200, tol=0.0))
            history = result.stress_history
            assert all(later <= earlier for earlier, later in zip(history, history[1:]))
            scale = np.sum(np.triu(D, k=1) ** 2)
            expected = math.sqrt(raw_stress(result.coordinates, D) / scale)
            assert result.stress == pytest.approx(expected, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_sklearn_smacof(self, seed):
        rng = np.random.default_rng(100 + seed)
        A = rng.random((12, 12))
        D = (A + A.T) / 2
        np.fill_diagonal(D, 0.0)
        _, reference = smacof(
            D,
            metric=True,
            n_components=2,
            init=classical_scaling(D, 2),
            n_init=1,
            max_iter=5000,
            eps=1e-12,
            normalized_stress=False,
        )
        result = mds_footprint(D, MdsParams(max_iter=5000, tol=1e-12))
        assert raw_stress(result.coordinates, D) == pytest.approx(reference, rel=1e-4)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        A = rng.random((10, 10))
        D = (A + A.T) / 2
        np.fill_diagonal(D, 0.0)
        np.testing.assert_array_equal(mds_footprint(D).coordinates, mds_footprint(D).coordinates)

    @pytest.mark.parametrize(
        "matrix",
        [
            np.zeros((2, 2)),
            np.zeros((3, 4)),
            np.array([[0, 1, 2], [1, 0, 1], [3, 1, 0]], dtype=float),
            np.array([[0, -1, 1], [-1, 0, 1], [1, 1, 0]], dtype=float),
            np.array([[1, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float),
        ],
        ids=["too_small", "not_square", "asymmetric", "negative", "nonzero_diagonal"],
    )
    def test_invalid_matrix(self, matrix):
        with pytest.raises(ValueError):
            mds_footprint(matrix)


# ─────────────────────────────────────────────────────────────────────────────
# Tests for build_footprint
# ─────────────────────────────────────────────────────────────────────────────


class TestBuildFootprint:
    """Test the footprint of a run history."""

    @pytest.fixture
    def history(self, mixed_space):
        history = RunHistory(mixed_space, [1.0, 3.0])
        rows = [
            (0, 1.0, 0.5, "a"),
            (1, 1.0, 0.2, "b"),
            (2, 1.0, None, "c"),
            (3, 1.0, 0.7, "a"),
            (1, 3.0, 0.3, "b"),
            (1, 3.0, 0.1, "b"),
            (0, 3.0, 0.4, "a"),
        ]
        for t, (config_id, budget, loss, c) in enumerate(rows):
            config = mixed_space.make_configuration({"x": config_id / 4, "c": c})
            status = TrialStatus.OK if loss is not None else TrialStatus.FAILED
            history.append(TrialRecord(config_id, 0, budget, config, loss, status, 1, t, t + 1, 0))
        return history

    def test_inputs_use_highest_successful_budget(self, history):
        rows = {
            config_id: (loss, budget) for config_id, _, loss, budget in footprint_inputs(history)
        }
        assert rows[0] == (0.4, 3.0)
        assert rows[1][0] == pytest.approx(0.2)
        assert rows[1][1] == 3.0
        assert math.isnan(rows[2][0]) and rows[2][1] == 1.0
        assert rows[3] == (0.7, 1.0)

    def test_one_point_per_configuration(self, history, mixed_space):
        footprint = build_footprint(history, mixed_space)
        assert [p.config_id for p in footprint.points] == [0, 1, 2, 3]
        assert [p.incumbent for p in footprint.points] == [False, True, False, False]
        assert footprint.stress >= 0.0
