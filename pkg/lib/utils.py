# -*- coding: utf-8 -*-
"""Utilities

This module contains utility type functions of use to the broader module.

This file contains the following functions:

    * trapezoid_weights - End-point halved weights {1/2, 1, ..., 1, 1/2}
    * log_grid - Log-spaced tuning grid
    * substream - Named, seeded random generator
    * spd_solve - Solve a symmetric positive-definite system
    * spd_inverse - Invert a symmetric positive-definite matrix
    * symmetrize - Symmetric part of a square matrix

"""

import logging
import zlib

import numpy as np
from scipy import linalg

from lib.errors import SingularSystemError

logger = logging.getLogger(__name__)


def trapezoid_weights(n_points):
    '''
    Diagonal of D = diag{1/2, 1, ..., 1, 1/2}.

    Parameters:
        n_points (int): Number of grid points, at least 2

    Returns:
        np.ndarray: Weight vector of length ``n_points``
    '''
    d = np.ones(n_points)
    d[0] = d[-1] = 0.5
    return d


def log_grid(low, high, num):
    '''Log-spaced grid from ``low`` to ``high`` inclusive'''
    return np.logspace(np.log10(low), np.log10(high), num)


def substream(seed, *keys):
    '''
    Random generator for a named sub-stream of a run seed.

    The stream name is hashed with crc32 so the same (seed, keys) gives the
    same generator in every process.

    Parameters:
        seed (int): Run seed
        keys: Stream name parts, e.g. ``('sim', 3)``

    Returns:
        np.random.Generator
    '''
    name = ':'.join(str(k) for k in keys)
    entropy = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode('utf-8'))]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def symmetrize(a):
    return 0.5 * (a + a.T)


def _cho_factor(a, what, penalty=None):
    try:
        factor = linalg.cho_factor(a, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as err:
        raise SingularSystemError(f'{what}: system is not positive definite '
                                  f'(penalty={penalty}): {err}',
                                  penalty=penalty) from err
    if np.any(np.diag(factor[0]) <= 0.0):
        raise SingularSystemError(f'{what}: system is not positive definite '
                                  f'(penalty={penalty})', penalty=penalty)
    return factor


def spd_solve(a, b, what='linalg', penalty=None):
    '''
    Solve ``a x = b`` for symmetric positive-definite ``a`` by Cholesky.

    Parameters:
        a (np.ndarray): Square SPD matrix
        b (np.ndarray): Right-hand side, vector or matrix
        what (str): Module prefix used in error messages
        penalty (float): Penalty reported if the factorization fails

    Returns:
        np.ndarray: Solution with the shape of ``b``

    Raises:
        SingularSystemError: if ``a`` is not numerically positive definite
    '''
    return linalg.cho_solve(_cho_factor(a, what, penalty), b)


def spd_inverse(a, what='linalg', penalty=None):
    '''Symmetric inverse of an SPD matrix via Cholesky'''
    inv = linalg.cho_solve(_cho_factor(a, what, penalty), np.eye(a.shape[0]))
    return symmetrize(inv)
