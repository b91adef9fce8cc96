import numpy as np
import pytest

from distill_lab.spectral import SpectralDecomposition, design_from_matrix


def random_design(rng, d, n):
    """Full-rank d x n feature matrix with singular values of order one."""
    while True:
        Phi = rng.normal(size=(d, n)) / np.sqrt(d)
        s = np.linalg.svd(Phi, compute_uv=False)
        if s[-1] > 1e-3 * s[0]:
            return design_from_matrix(Phi)


def random_spec(rng, d, n, p):
    return SpectralDecomposition(random_design(rng, d, n), p)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
