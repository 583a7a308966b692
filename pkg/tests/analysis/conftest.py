import pytest

from src.benchmarks import get_objective
from src.optimizer import fmin


@pytest.fixture(scope="session")
def sphere_run():
    """A finished BOHB run on the 2-D noisy sphere: 44 records, 10 of them at budget 9."""
    objective = get_objective("noisy-sphere-d2")
    return fmin(objective, objective.space, (1.0, 9.0), n_iterations=6, seed=0)
