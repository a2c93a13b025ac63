# -*- coding: utf-8 -*-
"""Fourier Basis

Orthonormal Fourier basis on [0, 1] with its exact Gram matrix and
second-derivative roughness penalty, plus the shifted Legendre pair used as
the coefficient function in simulations.

The basis functions are

    phi_1(t) = 1
    phi_2j(t) = sqrt(2) cos(2 pi j t)
    phi_2j+1(t) = sqrt(2) sin(2 pi j t)

so that the Gram matrix Psi is the identity and the penalty
W = [<phi_i'', phi_j''>] is diagonal with entries (2 pi j)^4.

This file contains the following functions:

    * fourier_basis - Build a BasisSystem of size M
    * eval_basis - Evaluate the basis (or its second derivative) at points
    * default_M - Basis size 1 + 2 floor((J - 1) / 2) for a J-point grid
    * legendre_pair - Normalized shifted Legendre polynomials of order 1, 2

"""

from dataclasses import dataclass

import numpy as np

from lib.errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class BasisSystem:
    '''
    Fourier basis of size M with Gram matrix ``psi`` and penalty ``w``.

    Attributes:
        M (int): Number of basis functions
        psi (np.ndarray): M x M Gram matrix, the identity
        w (np.ndarray): M x M diagonal roughness penalty
    '''
    M: int
    psi: np.ndarray
    w: np.ndarray

    def frequencies(self):
        '''Integer frequency j of each basis function (0 for the constant)'''
        return _frequencies(self.M)

    def compatible(self, other):
        '''True if ``other`` is the same basis'''
        return (other is self) or (
            isinstance(other, BasisSystem) and other.M == self.M
            and np.array_equal(other.w, self.w))


def _frequencies(M):
    m = np.arange(M)
    return (m + 1) // 2


def _check_points(t, what):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.ndim != 1:
        raise InvalidArgumentError(f'{what}: points must be a 1-d vector')
    if t.size and (np.any(~np.isfinite(t)) or t.min() < 0.0 or t.max() > 1.0):
        raise InvalidArgumentError(f'{what}: points must lie in [0, 1]')
    return t


def fourier_basis(M):
    '''
    Build the Fourier basis of size M.

    Parameters:
        M (int): Number of basis functions, at least 1

    Returns:
        BasisSystem: with ``psi`` = I and diagonal ``w``

    Raises:
        InvalidArgumentError: if M < 1
    '''
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise InvalidArgumentError(f'basis: M must be a positive integer, '
                                   f'got {M}')
    M = int(M)
    psi = np.eye(M)
    # 16 pi^4 j^4 for both the cosine and sine of frequency j
    w = np.diag((2.0 * np.pi * _frequencies(M)) ** 4)
    psi.setflags(write=False)
    w.setflags(write=False)
    return BasisSystem(M=M, psi=psi, w=w)


def eval_basis(basis, t, deriv=0):
    '''
    Evaluate the basis at points ``t``.

    Parameters:
        basis (BasisSystem): The basis
        t (array-like): Points in [0, 1]
        deriv (int): 0 for the functions, 2 for their second derivatives

    Returns:
        np.ndarray: len(t) x M matrix with entry (j, m) = phi_m(t_j)
    '''
    t = _check_points(t, 'basis')
    if deriv not in (0, 2):
        raise InvalidArgumentError('basis: deriv must be 0 or 2')

    freq = basis.frequencies()
    angle = 2.0 * np.pi * np.outer(t, freq)
    phi = np.empty((t.size, basis.M))
    phi[:, 0] = 1.0
    cos_cols = np.arange(1, basis.M, 2)
    sin_cols = np.arange(2, basis.M, 2)
    phi[:, cos_cols] = np.sqrt(2.0) * np.cos(angle[:, cos_cols])
    phi[:, sin_cols] = np.sqrt(2.0) * np.sin(angle[:, sin_cols])

    if deriv == 2:
        phi = phi * -(2.0 * np.pi * freq) ** 2
    return phi


def default_M(J):
    '''
    Basis size used for a J-point grid, 1 + 2 floor((J - 1) / 2).

    Always odd and at most J, so cosines and sines come in pairs.
    '''
    if isinstance(J, bool) or int(J) != J or J < 2:
        raise InvalidArgumentError(
            f'basis: J must be an integer >= 2, got {J}')
    return 1 + 2 * ((int(J) - 1) // 2)


def legendre_pair(t):
    '''
    Shifted Legendre polynomials of orders 1 and 2, normalized on [0, 1].

    P1(t) = sqrt(3) (2t - 1) and P2(t) = sqrt(5) (6t^2 - 6t + 1); both have
    unit L2[0, 1] norm and are orthogonal to each other and to constants.

    Parameters:
        t (array-like): Points in [0, 1]

    Returns:
        (np.ndarray, np.ndarray): P1(t), P2(t)
    '''
    t = _check_points(t, 'basis')
    p1 = np.sqrt(3.0) * (2.0 * t - 1.0)
    p2 = np.sqrt(5.0) * (6.0 * t ** 2 - 6.0 * t + 1.0)
    return p1, p2
