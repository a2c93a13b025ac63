# -*- coding: utf-8 -*-
"""Penalized Estimators

Local, pooled and offset fits of the scalar-on-function regression
coefficient, i.e. the building blocks of offset transfer learning:

    local   c^(k) = (Omega^(k) + lambda W)^-1 Psi P^(k) Z^(k) Y^(k)
    pooled  c^(K) = (V'V + lambda_K W)^-1 V'Y over the stacked sources
    offset  c^(K) + (Omega^(0) + lambda_O W)^-1 Psi P^(0) Z^(0) r,
            r = Y^(0) - Z^(0)' P^(0)' Psi c^(K)

The local fit also carries the plug-in conditional mean and variance of c^(k)
given Z^(k) (trapezoidal approximation), used by the control-variates
estimators.

This file contains the following:

    * LocalFit - local estimate with its plug-in moments
    * LambdaPolicy - fixed lambda or cross-validated lambda
    * fit_local - local fit on one dataset
    * fit_pooled - pooled fit over a set of sources
    * fit_offset - offset step on the target
    * cv_lambda - k-fold cross-validation of a ridge penalty

"""

import logging
from dataclasses import dataclass

import numpy as np

from lib.errors import InvalidArgumentError
from lib.smoothing import CoefEstimate
from lib.utils import (log_grid, spd_solve, symmetrize, trapezoid_weights)

logger = logging.getLogger(__name__)

# Module global variables
_LAMBDA_GRID = (1e-8, 1e2, 25)
_CV_FOLDS = 5
_JITTER_TRIGGER = 1e-10
_JITTER_SIZE = 1e-8

VARIANCE_MODES = ('homoskedastic', 'hc')


@dataclass(frozen=True, eq=False)
class LocalFit:
    '''
    Local penalized fit of one dataset with its plug-in moments.

    Attributes:
        c_hat (np.ndarray): M-vector of coefficients
        lam (float): Penalty lambda used
        e_hat (np.ndarray): Plug-in E(c_hat | Z)
        v_hat (np.ndarray): Plug-in var(c_hat | Z), before jitter
        sigma2_eps (float): Measurement-error variance estimate
        sigma2_err (float): Regression-error variance estimate
        smoothed (SmoothedDataset): Data the fit used
        jitter (float): Ridge added to v_hat before inversion (0 if none)
        variance_mode (str): homoskedastic or hc
    '''
    c_hat: np.ndarray
    lam: float
    e_hat: np.ndarray
    v_hat: np.ndarray
    sigma2_eps: float
    sigma2_err: float
    smoothed: object
    jitter: float = 0.0
    variance_mode: str = 'homoskedastic'

    @property
    def basis(self):
        return self.smoothed.basis

    @property
    def v_stable(self):
        '''v_hat plus the recorded jitter; the matrix every inversion uses'''
        if self.jitter == 0.0:
            return self.v_hat
        return self.v_hat + self.jitter * np.eye(self.v_hat.shape[0])

    def estimate(self):
        return CoefEstimate(self.c_hat, 'local', self.basis,
                            info={'lambda': self.lam})


def _check_lambda(lam, what):
    if lam is None or not np.isfinite(lam) or lam < 0:
        raise InvalidArgumentError(f'estimators: {what} must be >= 0, '
                                   f'got {lam}')


def _ridge(omega, w, lam, rhs):
    '''Solve (omega + lam W) x = rhs'''
    return spd_solve(omega + lam * w, rhs, what='estimators', penalty=lam)


def _stable_jitter(v):
    trace = float(np.trace(v))
    min_eig = float(np.linalg.eigvalsh(v)[0])
    if min_eig < _JITTER_TRIGGER * trace:
        return _JITTER_SIZE * trace / v.shape[0]
    return 0.0


def fit_local(sm, lam, variance_mode='homoskedastic'):
    '''
    Local penalized fit on a single dataset.

    Parameters:
        sm (SmoothedDataset): Smoothed curves with responses
        lam (float): Penalty lambda; 0 only if Omega is nonsingular
        variance_mode (str): ``homoskedastic`` for the scalar plug-in
            var(Y | Z), ``hc`` for the degrees-of-freedom corrected squared
            residuals

    Returns:
        LocalFit

    Raises:
        InvalidArgumentError: bad lambda or mode, or n <= M in hc mode
        SingularSystemError: if Omega + lambda W is singular
    '''
    _check_lambda(lam, 'lambda')
    if variance_mode not in VARIANCE_MODES:
        raise InvalidArgumentError(
            f'estimators: unknown variance_mode `{variance_mode}`')
    basis = sm.basis
    n, J, M = sm.n, sm.raw.J, basis.M
    if variance_mode == 'hc' and n <= M:
        raise InvalidArgumentError(
            f'estimators: hc variance needs n > M (n={n}, M={M})')

    y, z, phi = sm.y, sm.raw.z, sm.phi
    feats = sm.features
    c_hat = _ridge(sm.omega, basis.w, lam, feats @ y)
    gain = _ridge(sm.omega, basis.w, lam, feats)         # (Omega+lam W)^-1 F

    resid_smooth = z - phi @ sm.b
    sigma2_eps = float(np.sum(resid_smooth ** 2) / (n * J))
    resid = y - feats.T @ c_hat
    sigma2_err = float(resid @ resid / n)

    d = trapezoid_weights(J)
    d_beta = d * (phi @ c_hat)                           # D Phi c
    e_y = z.T @ d_beta / J
    e_hat = gain @ e_y

    if variance_mode == 'homoskedastic':
        var_y = sigma2_err + sigma2_eps * float(d_beta @ d_beta) / J ** 2
        v_hat = var_y * (gain @ gain.T)
    else:
        var_y = n / (n - M) * (y - e_y) ** 2
        v_hat = (gain * var_y) @ gain.T
    v_hat = symmetrize(v_hat)

    jitter = _stable_jitter(v_hat)
    if jitter > 0:
        logger.debug('dataset %s: v_hat jitter %.3g added (M=%d, n=%d)',
                     sm.raw.id, jitter, M, n)
    return LocalFit(c_hat=c_hat, lam=float(lam), e_hat=e_hat, v_hat=v_hat,
                    sigma2_eps=sigma2_eps, sigma2_err=sigma2_err, smoothed=sm,
                    jitter=jitter, variance_mode=variance_mode)


def _check_shared_basis(datasets, what):
    basis = datasets[0].basis
    for sm in datasets[1:]:
        if not basis.compatible(sm.basis):
            raise InvalidArgumentError(f'estimators: {what} do not share one '
                                       'basis')
    return basis


def fit_pooled(sources, lam_pooled):
    '''
    Pooled fit over the given sources, stacked in the given order.

    Parameters:
        sources (list of SmoothedDataset): Sources with responses
        lam_pooled (float): Penalty lambda_K > 0

    Returns:
        CoefEstimate: tagged ``pooled``
    '''
    if len(sources) == 0:
        raise InvalidArgumentError('estimators: the pooled fit needs at '
                                   'least one source')
    _check_lambda(lam_pooled, 'lambda_K')
    basis = _check_shared_basis(sources, 'sources')

    # V'V and V'Y of the stacked design, accumulated block by block
    vtv = np.zeros((basis.M, basis.M))
    vty = np.zeros(basis.M)
    for sm in sources:
        vtv += sm.omega
        vty += sm.features @ sm.y
    c = _ridge(vtv, basis.w, lam_pooled, vty)
    return CoefEstimate(c, 'pooled', basis,
                        info={'lambda_K': float(lam_pooled),
                              'sources': [sm.raw.id for sm in sources]})


def fit_offset(pooled, target, lam_offset):
    '''
    Offset step: correct a pooled estimate with a ridge fit of the target
    residuals.

    Parameters:
        pooled (CoefEstimate): Pooled estimate c^(K)
        target (SmoothedDataset): Target smoothed curves with responses
        lam_offset (float): Penalty lambda_O > 0

    Returns:
        CoefEstimate: tagged ``otl``; ``info['offset']`` holds o^(K)
    '''
    _check_lambda(lam_offset, 'lambda_O')
    if not pooled.basis.compatible(target.basis):
        raise InvalidArgumentError('estimators: pooled estimate and target '
                                   'do not share one basis')
    feats = target.features
    resid = target.y - feats.T @ pooled.c
    offset = _ridge(target.omega, target.basis.w, lam_offset, feats @ resid)
    info = dict(pooled.info)
    info.update({'lambda_O': float(lam_offset), 'offset': offset})
    return CoefEstimate(pooled.c + offset, 'otl', target.basis, info=info)


def cv_lambda(features, response, w, rng, grid=None, folds=_CV_FOLDS):
    '''
    k-fold cross-validation of the ridge penalty for ``response ~ features``.

    Parameters:
        features (np.ndarray): M x n feature matrix (columns are subjects)
        response (np.ndarray): n-vector
        w (np.ndarray): M x M penalty
        rng (np.random.Generator): Fold assignment
        grid (array-like): Candidates; defaults to 25 log-spaced values in
            [1e-8, 1e2]
        folds (int): Number of folds, capped at n

    Returns:
        (float, np.ndarray): Selected lambda and the CV error per candidate
    '''
    grid = log_grid(*_LAMBDA_GRID) if grid is None else np.asarray(grid, float)
    n = response.size
    if n < 2:
        raise InvalidArgumentError('estimators: cross-validation needs at '
                                   'least two subjects')
    folds = max(2, min(folds, n))
    parts = np.array_split(rng.permutation(n), folds)

    errors = np.zeros(grid.size)
    for test in parts:
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        f_tr = features[:, train]
        gram, rhs = f_tr @ f_tr.T, f_tr @ response[train]
        f_te, y_te = features[:, test], response[test]
        for g, lam in enumerate(grid):
            try:
                c = _ridge(gram, w, lam, rhs)
            except ArithmeticError:
                errors[g] = np.inf
                continue
            errors[g] += float(np.sum((y_te - f_te.T @ c) ** 2))
    errors /= n
    best = int(np.argmin(errors))
    if not np.isfinite(errors[best]):
        raise InvalidArgumentError('estimators: cross-validation failed for '
                                   'every lambda')
    if best in (0, grid.size - 1):
        logger.warning('lambda CV picked grid end %g', grid[best])
    return float(grid[best]), errors


@dataclass(frozen=True)
class LambdaPolicy:
    '''
    How the ridge penalties lambda^(k), lambda_K and lambda_O are chosen.

    Attributes:
        lam (float): Fixed value for all three; None selects each by 5-fold
            cross-validation on the data it fits
        folds (int): Number of CV folds
    '''
    lam: float = None
    folds: int = _CV_FOLDS

    def local(self, sm, rng):
        if self.lam is not None:
            return self.lam
        return cv_lambda(sm.features, sm.y, sm.basis.w, rng,
                         folds=self.folds)[0]

    def pooled(self, sources, rng):
        if self.lam is not None:
            return self.lam
        feats = np.hstack([sm.features for sm in sources])
        resp = np.concatenate([sm.y for sm in sources])
        return cv_lambda(feats, resp, sources[0].basis.w, rng,
                         folds=self.folds)[0]

    def offset(self, pooled, target, rng):
        if self.lam is not None:
            return self.lam
        resid = target.y - target.features.T @ pooled.c
        return cv_lambda(target.features, resid, target.basis.w, rng,
                         folds=self.folds)[0]
