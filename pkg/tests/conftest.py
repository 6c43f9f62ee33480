import numpy as np
import pytest

from eit_bistability.bloch import AtomParams
from eit_bistability.config import ResultCacheConfig


@pytest.fixture(autouse=True)
def reset_result_cache():
    ResultCacheConfig.reset()
    yield
    ResultCacheConfig.reset()


@pytest.fixture
def two_level_atom() -> AtomParams:
    """|3> decoupled: gamma23 = gamma31 = 0, so gamma = 1/2."""
    return AtomParams(gamma21=1.0, gamma23=0.0, gamma31=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
