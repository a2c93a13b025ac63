# -*- coding: utf-8 -*-
"""Curve Smoothing

Roughness-penalized least squares smoothing of discretely observed curves.
Each column z_i of Z (J x n) is mapped to basis coefficients

    b_i = P z_i,    P = (Phi' Phi + rho W)^-1 Phi'

and the smoothed curves enter the regression through the feature Gram
Omega = Psi P Z Z' P' Psi.

This file contains the following:

    * RawDataset - noisy curves Z, responses Y and their even grid
    * SmoothedDataset - projector P, coefficients B and Omega
    * CoefEstimate - basis coefficients of an estimated coefficient function
    * even_grid - the evenly spaced grid t_j = (j - 1) / (J - 1)
    * center - subtract per-grid-point and response means
    * smooth - build a SmoothedDataset for a fixed rho
    * gcv_score / select_rho - generalized cross-validation for rho
    * empirical_cov_norm_sq - squared empirical-covariance norm of an estimate
    * predict - <X_i, beta> for every smoothed curve

"""

import logging
from dataclasses import dataclass, field

import numpy as np

from lib.basis import eval_basis
from lib.errors import InvalidArgumentError, SingularSystemError
from lib.utils import log_grid, spd_solve, symmetrize

logger = logging.getLogger(__name__)

# Module global variables
_GRID_TOL = 1e-9
_COND_LIMIT = 1e12
_RHO_GRID = (1e-10, 1.0, 25)

METHODS = ('local', 'otl', 'aotl', 'cvs', 'pcvs')
_TAGS = METHODS + ('pooled',)


def even_grid(J):
    '''Evenly spaced grid of J points on [0, 1]'''
    return np.linspace(0.0, 1.0, J)


@dataclass(frozen=True, eq=False)
class RawDataset:
    '''
    Discretely observed noisy curves and their scalar responses.

    Attributes:
        z (np.ndarray): J x n matrix, column i holds subject i
        y (np.ndarray): n-vector of responses
        grid (np.ndarray): J evenly spaced points from 0 to 1
        id (str or int): Dataset label, 0 for the target

    Raises:
        InvalidArgumentError: if any of the shape or grid invariants fail
    '''
    z: np.ndarray
    y: np.ndarray
    grid: np.ndarray
    id: object = 0

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        if z.ndim != 2:
            raise InvalidArgumentError('smoothing: z must be a J x n matrix')
        if grid.size < 2 or z.shape[0] != grid.size:
            raise InvalidArgumentError(
                f'smoothing: z has {z.shape[0]} rows but the grid has '
                f'{grid.size} points (need J >= 2)')
        if z.shape[1] < 1:
            raise InvalidArgumentError('smoothing: need at least one subject')
        if y.size != z.shape[1]:
            raise InvalidArgumentError(
                f'smoothing: y has length {y.size}, expected {z.shape[1]}')
        deviation = grid_deviation(grid)
        if grid[0] != 0.0 or grid[-1] != 1.0 or deviation > _GRID_TOL \
                or np.any(np.diff(grid) <= 0):
            raise InvalidArgumentError(
                'smoothing: grid must be strictly increasing and evenly '
                f'spaced from 0 to 1 (max spacing deviation {deviation:g})')
        object.__setattr__(self, 'z', z)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'grid', grid)

    @property
    def J(self):
        return self.z.shape[0]

    @property
    def n(self):
        return self.z.shape[1]

    def subset(self, idx):
        '''RawDataset restricted to the subjects in ``idx``'''
        idx = np.asarray(idx, dtype=int)
        return RawDataset(self.z[:, idx], self.y[idx], self.grid, self.id)


def grid_deviation(grid):
    '''Largest distance of ``grid`` from the even grid on its end points'''
    grid = np.asarray(grid, dtype=float)
    even = np.linspace(grid[0], grid[-1], grid.size)
    return float(np.max(np.abs(grid - even)))


def center(raw, means=None):
    '''
    Subtract per-grid-point means of Z (across subjects) and the mean of Y.

    Parameters:
        raw (RawDataset): Data to center
        means ((np.ndarray, float)): Means to remove; computed from ``raw``
            when None, which lets a test split reuse training means

    Returns:
        (RawDataset, (np.ndarray, float)): centered data and the means used
    '''
    if means is None:
        means = (raw.z.mean(axis=1), float(raw.y.mean()))
    z_mean, y_mean = means
    centered = RawDataset(raw.z - z_mean[:, None], raw.y - y_mean, raw.grid,
                          raw.id)
    return centered, means


@dataclass(frozen=True, eq=False)
class SmoothedDataset:
    '''
    Smoothed curves of one dataset.

    Attributes:
        p (np.ndarray): M x J projector
        b (np.ndarray): M x n curve coefficients, b = p z
        omega (np.ndarray): M x M feature Gram Psi b b' Psi
        rho (float): Smoothing parameter
        basis (BasisSystem): Basis shared by every dataset
        raw (RawDataset): The observations (responses live here)
        phi (np.ndarray): J x M basis evaluation matrix on the grid
    '''
    p: np.ndarray
    b: np.ndarray
    omega: np.ndarray
    rho: float
    basis: object
    raw: RawDataset
    phi: np.ndarray

    @property
    def n(self):
        return self.b.shape[1]

    @property
    def features(self):
        '''M x n matrix Psi P Z; column i gives <X_i, phi_m> for all m'''
        return self.basis.psi @ self.b

    @property
    def y(self):
        return self.raw.y

    def subset(self, idx):
        '''Same smoother restricted to the subjects in ``idx``'''
        idx = np.asarray(idx, dtype=int)
        b = self.b[:, idx]
        return SmoothedDataset(p=self.p, b=b, omega=_omega(self.basis, b),
                               rho=self.rho, basis=self.basis,
                               raw=self.raw.subset(idx), phi=self.phi)


@dataclass(frozen=True, eq=False)
class CoefEstimate:
    '''
    Basis coefficients c of an estimate beta = phi' c.

    Attributes:
        c (np.ndarray): M-vector
        method (str): local, otl, aotl, cvs, pcvs (or pooled)
        basis (BasisSystem): Basis the coefficients refer to
        info (dict): Method details (tuning values, active groups, ...)
    '''
    c: np.ndarray
    method: str
    basis: object
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if c.size != self.basis.M:
            raise InvalidArgumentError(
                f'smoothing: coefficient length {c.size} != M={self.basis.M}')
        if self.method not in _TAGS:
            raise InvalidArgumentError(
                f'smoothing: unknown method tag `{self.method}`')
        object.__setattr__(self, 'c', c)


def _omega(basis, b):
    f = basis.psi @ b
    return symmetrize(f @ f.T)


def _penalized_gram(basis, phi, rho):
    return phi.T @ phi + rho * basis.w


def smooth(raw, basis, rho, center_data=False):
    '''
    Smooth every curve of ``raw`` with roughness penalty ``rho``.

    Parameters:
        raw (RawDataset): Observations
        basis (BasisSystem): Basis
        rho (float): Smoothing parameter, >= 0
        center_data (bool): Center Z and Y by sample means first. Defaults to
            False (simulated data are generated centered)

    Returns:
        SmoothedDataset

    Raises:
        InvalidArgumentError: if rho < 0
        SingularSystemError: if Phi'Phi + rho W cannot be factorized, or
            rho = 0 and Phi'Phi is numerically singular
    '''
    if not np.isfinite(rho) or rho < 0:
        raise InvalidArgumentError(f'smoothing: rho must be >= 0, got {rho}')
    if center_data:
        raw, _ = center(raw)

    phi = eval_basis(basis, raw.grid)
    gram = _penalized_gram(basis, phi, rho)
    if rho == 0.0:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise SingularSystemError(
                f'smoothing: Phi\'Phi is singular at rho=0 (condition '
                f'{cond:.3g}, M={basis.M}, J={raw.J})', penalty=rho)
    p = spd_solve(gram, phi.T, what='smoothing', penalty=rho)
    b = p @ raw.z
    return SmoothedDataset(p=p, b=b, omega=_omega(basis, b), rho=float(rho),
                           basis=basis, raw=raw, phi=phi)


def gcv_score(raw, basis, rho, phi=None):
    '''
    Generalized cross-validation score of the smoothing step,

        (nJ)^-1 ||Z - H Z||_F^2 / (1 - tr(H) / J)^2,   H = Phi P.

    Returns ``inf`` when the fit interpolates (tr(H) = J) or the system is
    singular.
    '''
    if phi is None:
        phi = eval_basis(basis, raw.grid)
    try:
        p = spd_solve(_penalized_gram(basis, phi, rho), phi.T,
                      what='smoothing', penalty=rho)
    except SingularSystemError:
        return np.inf
    hat = phi @ p
    dof = 1.0 - np.trace(hat) / raw.J
    if dof <= 1e-12:
        return np.inf
    resid = raw.z - hat @ raw.z
    return float(np.sum(resid ** 2) / (raw.n * raw.J) / dof ** 2)


def select_rho(raw, basis, grid=None):
    '''
    Pick rho by generalized cross-validation.

    Parameters:
        raw (RawDataset): Observations
        basis (BasisSystem): Basis
        grid (array-like): Candidate values. Defaults to 25 log-spaced values
            in [1e-10, 1]

    Returns:
        (float, np.ndarray): Selected rho and the GCV score of every candidate
    '''
    grid = log_grid(*_RHO_GRID) if grid is None else np.asarray(grid, float)
    phi = eval_basis(basis, raw.grid)
    scores = np.array([gcv_score(raw, basis, r, phi) for r in grid])
    if not np.any(np.isfinite(scores)):
        raise SingularSystemError('smoothing: GCV failed for every rho in '
                                  'the grid')
    best = int(np.argmin(scores))
    if best in (0, grid.size - 1):
        logger.warning('GCV for dataset %s picked grid end rho=%g',
                       raw.id, grid[best])
    return float(grid[best]), scores


def _check_same_basis(f, curves):
    if not f.basis.compatible(curves.basis):
        raise InvalidArgumentError(
            f'smoothing: estimate basis (M={f.basis.M}) does not match the '
            f'curves basis (M={curves.basis.M})')


def empirical_cov_norm_sq(f, target):
    '''
    Squared empirical-covariance norm n^-1 c' Omega c of an estimate, equal
    to n^-1 sum_i <f, X_i>^2 over the smoothed curves of ``target``.
    '''
    _check_same_basis(f, target)
    return float(f.c @ target.omega @ f.c) / target.n


def predict(f, curves):
    '''
    Predictions <X_i, beta> = c' Psi b_i for every smoothed curve.

    Parameters:
        f (CoefEstimate): Estimate
        curves (SmoothedDataset): Smoothed curves

    Returns:
        np.ndarray: n-vector of predictions
    '''
    _check_same_basis(f, curves)
    return curves.features.T @ f.c
