"""Shared test fixtures for qbl tests."""
import numpy as np
import pytest

from qbl.core import BdGPair
from qbl.models import ModelSpec


@pytest.fixture
def bkc_metastable():
    """Model 1 at the default point with kappa < Delta: OBC stable, PBC unstable."""
    return ModelSpec(family="model1", J=2.0, Delta=0.5, mu=0.0, kappa=0.3, N=12, bc="OBC")


@pytest.fixture
def bkc_stable():
    return ModelSpec(family="model1", J=2.0, Delta=0.5, mu=0.0, kappa=0.7, N=12, bc="OBC")


@pytest.fixture
def sweet_spot():
    """J = Delta, where the edge modes have closed forms."""
    return ModelSpec(family="model1", J=1.0, Delta=1.0, mu=0.1, kappa=0.3, N=10, bc="OBC")


@pytest.fixture
def lossy_pair():
    """Two decoupled lossy modes (J = Delta = 0): G = -i kappa 1."""
    return ModelSpec(family="model1", J=0.0, Delta=0.0, mu=0.0, kappa=0.5, N=2, bc="OBC")


@pytest.fixture
def single_lossy_mode():
    """BdG pair of one mode with L = sqrt(2 kappa) a, kappa = 0.5."""
    return BdGPair(H=np.zeros((2, 2), dtype=complex), M=np.diag([1.0, 0.0]).astype(complex))


@pytest.fixture
def oracle_spec():
    """Short, weakly pumped chain that the truncated-Fock oracle resolves at n_max = 8."""
    return ModelSpec(family="model1", J=1.0, Delta=0.2, mu=0.0, kappa=1.0, N=2, bc="OBC")


@pytest.fixture
def model2_metastable():
    """Model 2 with the default damping phase: OBC stable, PBC unstable, total winding 0."""
    return ModelSpec(family="model2", J=2.0, Delta=0.5, mu=0.0, kappa=0.3, Gamma=0.12, N=25, bc="OBC")
