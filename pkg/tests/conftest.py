import numpy as np
import pytest

from crimecast.panel import synthesize_panel


@pytest.fixture(scope="session")
def panel_50():
    return synthesize_panel(seed=7, n_states=50, first_year=2000, n_years=20)


@pytest.fixture(scope="session")
def panel_3():
    return synthesize_panel(seed=7, n_states=3, first_year=2000, n_years=20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
