import numpy as np
import pytest

from opsplit.operators import Affine


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def random_monotone_affine(rho, dim, rng, offset_scale=1.0):
    """A random affine spec whose symmetric part is at least rho*I."""
    c = rng.standard_normal((dim, dim))
    psd = c.T @ c / dim
    k = rng.standard_normal((dim, dim))
    m = rho * np.eye(dim) + psd + (k - k.T)
    return Affine(m, offset_scale * rng.standard_normal(dim))
