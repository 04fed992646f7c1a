import numpy as np
import pytest

from meshfree_llns.gas_model import ARGON, PrimitiveState

REF_STATE = PrimitiveState(rho=1.78e-3, u=0.0, T=273.0)
TABLE1_L = 1.25e-4


@pytest.fixture
def gas():
    return ARGON


@pytest.fixture
def ref_state():
    return REF_STATE


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
