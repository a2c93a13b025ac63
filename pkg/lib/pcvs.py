# -*- coding: utf-8 -*-
"""Penalized Control Variates

The unknown mean of the control variates is replaced by the group-lasso
solution

    delta^zeta = argmin (delta_hat - d)' Q (delta_hat - d) + zeta sum_k ||d_k||

with Q the precision of delta_hat and one group per source; the estimate is
then c^(0) - U* (delta_hat - delta^zeta). zeta = 0 gives back the local
estimate, a large zeta gives the full correction c^(0) - U* delta_hat, and
in between whole sources are switched off.

The solver is an accelerated proximal gradient method with function-value
restart; its certificate is the KKT residual

    active k:   || 2[Q(d - delta_hat)]_k + zeta d_k / ||d_k|| ||
    inactive k: max(0, || 2[Q(d - delta_hat)]_k || - zeta)

This file contains the following:

    * GroupLassoProblem / GroupLassoSolution
    * group_lasso_solve - the solver
    * kkt_residual - optimality certificate of a candidate solution
    * zeta_max - smallest zeta with an all-zero solution
    * pcvs_estimate - the penalized control-variates estimate
    * zeta_path - warm-started solutions along a decreasing zeta grid
    * zeta_grid - default log grid from zeta_max down

"""

import logging
from dataclasses import dataclass

import numpy as np

from lib.cvs import corrected
from lib.errors import InvalidArgumentError, NonConvergenceError
from lib.smoothing import CoefEstimate
from lib.utils import log_grid

logger = logging.getLogger(__name__)

# Module global variables
_DEFAULT_TOL = 1e-8
_DEFAULT_MAX_ITER = 50000
_POWER_ITERATIONS = 100
_SYM_TOL = 1e-10
_PSD_TOL = 1e-8
_MONOTONE_SLACK = 1e-12
_ZETA_GRID_SIZE = 20
_ZETA_GRID_RATIO = 1e-4


@dataclass(frozen=True, eq=False)
class GroupLassoProblem:
    '''
    Group-lasso problem in the control variates.

    Attributes:
        q (np.ndarray): MK x MK symmetric PSD weight (precision) matrix
        delta_hat (np.ndarray): MK-vector
        zeta (float): Penalty level >= 0
        group_size (int): M
        n_groups (int): K
    '''
    q: np.ndarray
    delta_hat: np.ndarray
    zeta: float
    group_size: int
    n_groups: int

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        delta_hat = np.asarray(self.delta_hat, dtype=float).reshape(-1)
        size = self.group_size * self.n_groups
        if q.shape != (size, size) or delta_hat.size != size:
            raise InvalidArgumentError(
                f'pcvs: expected q {size}x{size} and delta_hat of length '
                f'{size}, got {q.shape} and {delta_hat.size}')
        scale = max(1.0, float(np.max(np.abs(q)))) if q.size else 1.0
        if np.max(np.abs(q - q.T)) > _SYM_TOL * scale:
            raise InvalidArgumentError('pcvs: q is not symmetric')
        if not np.isfinite(self.zeta) or self.zeta < 0:
            raise InvalidArgumentError(f'pcvs: zeta must be >= 0, got '
                                       f'{self.zeta}')
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'delta_hat', delta_hat)

    def groups(self, x):
        '''View of ``x`` as n_groups x group_size'''
        return x.reshape(self.n_groups, self.group_size)

    def objective(self, x):
        r = self.delta_hat - x
        return float(r @ self.q @ r) + self.zeta * float(
            np.sum(np.linalg.norm(self.groups(x), axis=1)))


@dataclass(frozen=True, eq=False)
class GroupLassoSolution:
    '''
    Attributes:
        delta_zeta (np.ndarray): MK-vector solution
        iterations (int): Iterations performed
        kkt_residual (float): KKT residual of ``delta_zeta``
        active_groups (tuple of int): 1-based indices of nonzero groups
        objectives (tuple of float): Objective after every iteration
    '''
    delta_zeta: np.ndarray
    iterations: int
    kkt_residual: float
    active_groups: tuple
    objectives: tuple = ()


def kkt_residual(q, delta_hat, zeta, delta, group_size):
    '''
    KKT residual of ``delta`` for the group-lasso problem (q, delta_hat,
    zeta). Zero exactly at the minimizer.
    '''
    grad = (2.0 * (q @ (delta - delta_hat))).reshape(-1, group_size)
    groups = np.asarray(delta).reshape(-1, group_size)
    norms = np.linalg.norm(groups, axis=1)
    worst = 0.0
    for g, d, nrm in zip(grad, groups, norms):
        if nrm > 0.0:
            viol = float(np.linalg.norm(g + zeta * d / nrm))
        else:
            viol = max(0.0, float(np.linalg.norm(g)) - zeta)
        worst = max(worst, viol)
    return worst


def zeta_max(q, delta_hat, group_size):
    '''Smallest zeta whose solution is zero: max_k ||2 [Q delta_hat]_k||'''
    grad = (2.0 * (q @ delta_hat)).reshape(-1, group_size)
    return float(np.max(np.linalg.norm(grad, axis=1)))


def _power_lambda_max(q, iterations=_POWER_ITERATIONS):
    x = np.ones(q.shape[0]) / np.sqrt(q.shape[0])
    lam = 0.0
    for _ in range(iterations):
        y = q @ x
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        lam = float(x @ q @ x)
    return lam


def _prox(p, v, threshold):
    '''Blockwise soft-thresholding of v by ``threshold``'''
    groups = p.groups(v)
    norms = np.linalg.norm(groups, axis=1, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
        scale = np.where(norms > 0.0,
                         np.maximum(0.0, 1.0 - threshold / norms), 0.0)
    return (groups * scale).reshape(-1)


def _solution(p, x, iterations, objectives):
    active = tuple(int(k) + 1 for k in
                   np.flatnonzero(np.linalg.norm(p.groups(x), axis=1) > 0.0))
    return GroupLassoSolution(
        delta_zeta=x, iterations=iterations,
        kkt_residual=kkt_residual(p.q, p.delta_hat, p.zeta, x, p.group_size),
        active_groups=active, objectives=tuple(objectives))


def group_lasso_solve(p, tol=_DEFAULT_TOL, max_iter=_DEFAULT_MAX_ITER,
                      init=None):
    '''
    Solve a GroupLassoProblem by accelerated proximal gradient.

    Parameters:
        p (GroupLassoProblem): The problem
        tol (float): KKT residual at which to stop
        max_iter (int): Iteration cap
        init (np.ndarray): Warm start; zeros when None

    Returns:
        GroupLassoSolution

    Raises:
        InvalidArgumentError: if q is not PSD or tol <= 0
        NonConvergenceError: if the cap is reached with residual > tol
    '''
    if tol <= 0:
        raise InvalidArgumentError(f'pcvs: tol must be > 0, got {tol}')
    eig = np.linalg.eigvalsh(p.q)
    if eig[0] < -_PSD_TOL * max(eig[-1], 0.0):
        raise InvalidArgumentError(f'pcvs: q is not PSD (min eigenvalue '
                                   f'{eig[0]:.3g})')

    if p.zeta == 0.0:
        return _solution(p, p.delta_hat.copy(), 0, [p.objective(p.delta_hat)])
    zero = np.zeros_like(p.delta_hat)
    if zeta_max(p.q, p.delta_hat, p.group_size) <= p.zeta:
        return _solution(p, zero, 0, [p.objective(zero)])

    lip = 2.0 * _power_lambda_max(p.q)
    if lip <= 0.0:
        return _solution(p, zero, 0, [p.objective(zero)])
    step = 1.0 / lip
    threshold = p.zeta * step

    def prox_grad(v):
        return _prox(p, v - step * 2.0 * (p.q @ (v - p.delta_hat)), threshold)

    x = zero if init is None else np.asarray(init, dtype=float).copy()
    y, t = x.copy(), 1.0
    f_x = p.objective(x)
    objectives = [f_x]
    residual = kkt_residual(p.q, p.delta_hat, p.zeta, x, p.group_size)
    it = 0
    while residual > tol and it < max_iter:
        it += 1
        x_new = prox_grad(y)
        f_new = p.objective(x_new)
        if f_new > f_x + _MONOTONE_SLACK * max(1.0, abs(f_x)):
            # Momentum overshot; restart with a plain step from x
            t = 1.0
            x_new = prox_grad(x)
            f_new = p.objective(x_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t, f_x = x_new, t_new, f_new
        objectives.append(f_x)
        residual = kkt_residual(p.q, p.delta_hat, p.zeta, x, p.group_size)

    if residual > tol:
        raise NonConvergenceError(
            f'pcvs: group lasso did not converge in {it} iterations '
            f'(KKT residual {residual:.3g} > {tol:.3g}, zeta={p.zeta:.4g})',
            residual=residual, iterations=it)
    logger.debug('group lasso: zeta=%.4g, %d iterations, residual %.3g',
                 p.zeta, it, residual)
    return _solution(p, x, it, objectives)


def _problem(sys, q, zeta):
    return GroupLassoProblem(q=q, delta_hat=sys.delta_hat, zeta=zeta,
                             group_size=sys.M, n_groups=sys.K)


def pcvs_estimate(sys, q, target_fit, zeta, tol=_DEFAULT_TOL,
                  max_iter=_DEFAULT_MAX_ITER, init=None):
    '''
    Penalized control-variates estimate c^(0) - U* (delta_hat - delta^zeta).

    Parameters:
        sys (CvsSystem): Control-variates system
        q (np.ndarray): delta precision from ``cvs.delta_precision`` over the
            same fits
        target_fit (LocalFit): The target's local fit
        zeta (float): Penalty level >= 0
        tol (float): Solver tolerance
        max_iter (int): Solver iteration cap
        init (np.ndarray): Optional warm start

    Returns:
        CoefEstimate: tagged ``pcvs``; ``info`` carries the solution
    '''
    if target_fit.c_hat.shape != sys.c0.shape:
        raise InvalidArgumentError('pcvs: target fit does not match the '
                                   'system')
    sol = group_lasso_solve(_problem(sys, q, zeta), tol=tol,
                            max_iter=max_iter, init=init)
    c = corrected(sys, sol.delta_zeta)
    return CoefEstimate(c, 'pcvs', target_fit.basis,
                        info={'zeta': float(zeta),
                              'active_groups': sol.active_groups,
                              'iterations': sol.iterations,
                              'kkt_residual': sol.kkt_residual,
                              'delta_zeta': sol.delta_zeta})


def zeta_grid(zmax, num=_ZETA_GRID_SIZE, ratio=_ZETA_GRID_RATIO):
    '''Descending log grid from ``zmax`` to ``zmax * ratio``'''
    if zmax <= 0.0:
        return np.array([0.0])
    return log_grid(zmax, zmax * ratio, num)


def zeta_path(sys, q, target_fit, grid, tol=_DEFAULT_TOL,
              max_iter=_DEFAULT_MAX_ITER):
    '''
    Warm-started pCVS estimates along a descending zeta grid.

    zeta_max is prepended when the grid starts below it, so the path always
    opens at the all-zero solution.

    Parameters:
        sys (CvsSystem): Control-variates system
        q (np.ndarray): delta precision
        target_fit (LocalFit): The target's local fit
        grid (list of float): Non-negative, sorted descending

    Returns:
        list of (float, CoefEstimate, tuple): zeta, estimate, active groups
    '''
    grid = [float(z) for z in grid]
    if any(z < 0 for z in grid):
        raise InvalidArgumentError('pcvs: zeta grid must be non-negative')
    if any(a < b for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError('pcvs: zeta grid must be sorted '
                                   'descending')
    zmax = zeta_max(q, sys.delta_hat, sys.M)
    if not grid or grid[0] < zmax:
        grid = [zmax] + grid

    path, warm = [], None
    for zeta in grid:
        est = pcvs_estimate(sys, q, target_fit, zeta, tol=tol,
                            max_iter=max_iter, init=warm)
        warm = est.info['delta_zeta']
        path.append((zeta, est, est.info['active_groups']))
    return path
