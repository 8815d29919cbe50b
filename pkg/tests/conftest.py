# File: tests/conftest.py
import os

# Select the small validation battery before pathcg reads its configuration
os.environ.setdefault('PATHCG_CONFIG', 'test')

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from pathcg.cg_maps import make_center_of_mass_map, make_projection_map  # noqa: E402
from pathcg.cli.validate import chain_model, harmonic_langevin  # noqa: E402
from pathcg.integrators import RngSpec  # noqa: E402
from pathcg.oracle import OUModel  # noqa: E402


@pytest.fixture
def rng():
    return RngSpec(20240501)


@pytest.fixture
def generator():
    return np.random.default_rng(7)


@pytest.fixture
def ou1():
    """dX = -X dt + sqrt(2) dB; stationary variance 1."""
    return OUModel(A=[[1.0]], sigma=[[np.sqrt(2.0)]])


@pytest.fixture
def ou2():
    """The 2D test bed with A = [[1, 0.5], [0, 2]] and sigma = I."""
    return OUModel(A=[[1.0, 0.5], [0.0, 2.0]], sigma=np.eye(2))


@pytest.fixture
def keep_first():
    return make_projection_map(2, [0])


@pytest.fixture
def harmonic():
    return harmonic_langevin()


@pytest.fixture
def chain():
    """3 unit masses, unit springs, unit tether; returns (model, stiffness)."""
    return chain_model(k=1.0, k0=1.0)


@pytest.fixture
def chain_com(chain):
    model, _ = chain
    return make_center_of_mass_map(model.masses, [[0, 1, 2]], 1)


@pytest.fixture
def chain_gibbs_samples(chain, generator):
    """Exact (q, p) draws from the chain's Gibbs law at beta = 1."""
    _, stiffness = chain
    factor = np.linalg.cholesky(np.linalg.inv(stiffness))
    n = 20_000
    q = generator.standard_normal((n, 3)) @ factor.T
    p = generator.standard_normal((n, 3))
    return np.concatenate([q, p], axis=1)
