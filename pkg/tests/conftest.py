import numpy as np
import pytest

from acadtraj import HmmModel


@pytest.fixture
def two_state_model() -> HmmModel:
    """The hand-checked 2-state, 2-symbol instance used across the suite."""
    return HmmModel(
        transition=[[0.9, 0.1], [0.1, 0.9]],
        emission=[[0.8, 0.2], [0.2, 0.8]],
        initial=[0.5, 0.5],
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
