"""Shared fixtures: small simulated datasets and synthetic local fits."""

from types import SimpleNamespace

import numpy as np
import pytest

from lib.basis import fourier_basis
from lib.estimators import LocalFit
from lib.simbench import SimConfig, simulate_dataset
from lib.smoothing import RawDataset, even_grid, smooth
from lib.utils import substream


def _random_spd(rng, m, scale=1.0):
    a = rng.standard_normal((m, m))
    return scale * (a @ a.T / m + 0.5 * np.eye(m))


def _synthetic_fits(rng, M, K, blocks=None):
    '''K + 1 LocalFits with random coefficients and the given (or random)
    variance blocks; only the fields CVS uses are meaningful.'''
    holder = SimpleNamespace(basis=fourier_basis(M))
    fits = []
    for k in range(K + 1):
        v = blocks[k] if blocks is not None else _random_spd(rng, M)
        fits.append(LocalFit(c_hat=rng.standard_normal(M), lam=1.0,
                             e_hat=rng.standard_normal(M), v_hat=v,
                             sigma2_eps=0.0, sigma2_err=0.0,
                             smoothed=holder))
    return fits


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def random_spd():
    return _random_spd


@pytest.fixture
def make_fits():
    return _synthetic_fits


@pytest.fixture(scope='session')
def small_cfg():
    return SimConfig(n=60, j=21, k_sources=3, eta=(100.0,), latent_grid=201,
                     replications=2, seed=11, methods=('otl', 'cvs'))


@pytest.fixture(scope='session')
def small_data(small_cfg):
    '''Target and three sources of one simulated replicate'''
    stream = substream(small_cfg.seed, 'sim', 0)
    target = simulate_dataset(small_cfg, 'target', stream).raw
    sources = [simulate_dataset(small_cfg, k, stream).raw
               for k in range(1, small_cfg.k_sources + 1)]
    return target, sources


@pytest.fixture
def small_smoothed(small_data):
    '''Smoothed target and sources on a 7-function basis, rho fixed'''
    basis = fourier_basis(7)
    target, sources = small_data
    return smooth(target, basis, 1e-6), \
        [smooth(s, basis, 1e-6) for s in sources]


@pytest.fixture
def tiny_raw(rng):
    '''n=12 noisy curves on a 9-point grid with linear responses'''
    J, n = 9, 12
    z = rng.standard_normal((J, n))
    y = z.mean(axis=0) + 0.1 * rng.standard_normal(n)
    return RawDataset(z, y, even_grid(J))
