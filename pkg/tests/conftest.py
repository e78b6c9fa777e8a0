import warnings

import numpy as np
import pytest

from amtransport import lattice

ROW4 = (-0.1, 0.3, -0.4, 0.2)


@pytest.fixture(scope="session")
def spec():
    return lattice.LatticeSpec(n_sites=5, delta=ROW4)


@pytest.fixture(scope="session")
def fit(spec):
    return lattice.fit_tunneling(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(autouse=True)
def _strict_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        yield
