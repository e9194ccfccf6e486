import math

import pytest

from stokes_tumor.model import ModelParams, canonical_model
from stokes_tumor.radial_stationary import find_stationary
from stokes_tumor.spectrum import compute_spectrum

# sigma_c that puts the canonical lambda = 1 tumour exactly at unit radius
SIGMA_C_UNIT = 3.0 * (1.0 / math.tanh(1.0) - 1.0)


def unit_model(lam=1.0, mu=1.0):
    """Canonical model whose stationary radius is 1 for the given ``lam``."""
    k = math.sqrt(lam)
    sigma_c = 3.0 * (1.0 / (k * math.tanh(k)) - 1.0 / lam)
    return canonical_model(ModelParams(lam=lam, mu=mu, sigma_c=sigma_c))


@pytest.fixture(scope="session")
def canonical():
    fns = unit_model()
    return fns, find_stationary(fns)


@pytest.fixture(scope="session")
def spectrum64(canonical):
    fns, st = canonical
    return compute_spectrum(st, fns, 64)
