# -*- coding: utf-8 -*-
"""Simulation Benchmark

Monte-Carlo comparison of the transfer estimators against the target-only
local estimator.

Curves are zero-mean Gaussian processes with covariance s exp(-r |u - v|)
(s = 10 for the target, s = eta for every source), drawn on a fine latent
grid; the observation grid is every r-th latent point. Every dataset shares
the coefficient function beta = P1 + P2, so the sources differ from the
target only through the spread of their curves.

Per replicate the target is split into training and test subjects, the
methods are fitted on the training part, and two relative errors are
reported against the local estimator:

    REE = ||c - c_true||_C^2 / ||c_local - c_true||_C^2   (training curves)
    RPE = sum (Y - <X, c>)^2 / sum (Y - <X, c_local>)^2   (test curves)

This file contains the following:

    * SimConfig - simulation settings
    * ResultRow - one (replicate, method) result
    * SimulatedData - a simulated dataset and its hidden truth
    * truth_coefficients - basis projection of beta and its residual
    * simulate_dataset - draw the target or a source
    * ree / rpe - relative estimation and prediction errors
    * run_experiment - replicate loop over an eta sweep
    * run_cycle - leave-one-out cycling over observed datasets
    * summarize - per-method medians

"""

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import linalg

from lib.basis import default_M, eval_basis, fourier_basis, legendre_pair
from lib.errors import (DegenerateMetricError, InvalidArgumentError,
                        SingularSystemError, SofrError)
from lib.pipeline import FitSettings, TransferProblem
from lib.smoothing import METHODS, CoefEstimate, RawDataset, \
    empirical_cov_norm_sq, even_grid, predict
from lib.utils import substream, trapezoid_weights

logger = logging.getLogger(__name__)

# Module global variables
_KERNEL_JITTER = 1e-10
_TRANSFER_METHODS = tuple(m for m in METHODS if m != 'local')
RESULT_COLUMNS = ['replicate', 'method', 'eta', 'ree', 'rpe', 'wall_ms']


@dataclass(frozen=True)
class SimConfig:
    '''
    Simulation settings.

    Attributes:
        n (int): Subjects per dataset
        j (int): Observation grid size J
        k_sources (int): Number of sources K
        eta (tuple of float): Source covariance scales to sweep
        target_scale (float): Target covariance scale
        kernel_rate (float): Decay rate of the exponential kernel
        noise_var_meas (float): Measurement-error variance of Z
        noise_var_reg (float): Regression-error variance of Y
        replications (int): Replicates per eta
        seed (int): Run seed
        train_frac (float): Share of target subjects used for training
        latent_grid (int): Requested latent grid size; the grid actually used
            is the closest size putting every observation point on it
        methods (tuple of str): Transfer methods to run besides local
        rho (float): Fixed smoothing parameter, None for GCV
        lam (float): Fixed ridge penalty, None for CV
        zeta (float): Fixed group-lasso penalty, None for validation
        alpha (float): Aggregation confidence level
        variance_mode (str): homoskedastic or hc
        n_jobs (int): joblib workers over replicates
        record_time (bool): Keep wall times; rows carry 0 otherwise
    '''
    n: int = 300
    j: int = 50
    k_sources: int = 4
    eta: tuple = (100.0, 50.0, 10.0, 5.0, 1.0)
    target_scale: float = 10.0
    kernel_rate: float = 15.0
    noise_var_meas: float = 0.01
    noise_var_reg: float = 0.01
    replications: int = 20
    seed: int = 0
    train_frac: float = 0.8
    latent_grid: int = 1001
    methods: tuple = _TRANSFER_METHODS
    rho: float = None
    lam: float = None
    zeta: float = None
    alpha: float = 0.05
    variance_mode: str = 'homoskedastic'
    n_jobs: int = 1
    record_time: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'eta',
                           tuple(float(e) for e in np.atleast_1d(self.eta)))
        object.__setattr__(self, 'methods', tuple(self.methods))
        for name in ('n', 'j', 'k_sources', 'replications', 'latent_grid'):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f'simbench: {name} must be '
                                           'positive')
        if self.j < 2 or self.latent_grid < self.j:
            raise InvalidArgumentError('simbench: need 2 <= j <= latent_grid')
        for name in ('target_scale', 'kernel_rate', 'noise_var_meas',
                     'noise_var_reg', 'train_frac'):
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f'simbench: {name} must be '
                                           'finite')
        if not self.eta or not np.all(np.isfinite(self.eta)) \
                or min(self.eta) <= 0:
            raise InvalidArgumentError('simbench: eta must be finite and > 0')
        if self.n_jobs == 0:
            raise InvalidArgumentError('simbench: n_jobs must not be 0')
        if self.target_scale <= 0 or self.kernel_rate <= 0:
            raise InvalidArgumentError('simbench: target_scale and '
                                       'kernel_rate must be > 0')
        if self.noise_var_meas < 0 or self.noise_var_reg < 0:
            raise InvalidArgumentError('simbench: noise variances must be '
                                       '>= 0')
        if not 0.0 < self.train_frac < 1.0:
            raise InvalidArgumentError('simbench: train_frac must be in '
                                       '(0, 1)')
        if self.rho is not None and not 0 <= self.rho < np.inf:
            raise InvalidArgumentError('simbench: rho must be finite and '
                                       '>= 0')
        self.settings()
        unknown = set(self.methods) - set(_TRANSFER_METHODS)
        if unknown:
            raise InvalidArgumentError(f'simbench: unknown methods '
                                       f'{sorted(unknown)}')

    @property
    def stride(self):
        '''Latent points per observation interval'''
        return max(1, int(round((self.latent_grid - 1) / (self.j - 1))))

    @property
    def latent_size(self):
        '''Latent grid size actually used, (J - 1) * stride + 1'''
        return (self.j - 1) * self.stride + 1

    def settings(self):
        return FitSettings(lam=self.lam, zeta=self.zeta, alpha=self.alpha,
                           variance_mode=self.variance_mode)


@dataclass(frozen=True)
class ResultRow:
    '''
    Attributes:
        replicate (int): Replicate index
        method (str): Method tag
        eta (float): Source covariance scale (nan for observed data)
        ree (float): Relative estimation error, None when the truth is unknown
        rpe (float): Relative prediction error
        wall_ms (float): Fit time of the method
        target (object): Target dataset label
        error (str): Failure message when the method failed, else None
    '''
    replicate: int
    method: str
    eta: float
    ree: float
    rpe: float
    wall_ms: float = 0.0
    target: object = 0
    error: str = None


@dataclass(frozen=True, eq=False)
class SimulatedData:
    '''
    A simulated dataset with its hidden truth.

    Attributes:
        raw (RawDataset): Observed curves Z and responses Y
        x (np.ndarray): L x n true curves on the latent grid
        latent_t (np.ndarray): Latent grid
        beta (np.ndarray): Coefficient function on the latent grid
    '''
    raw: RawDataset
    x: np.ndarray
    latent_t: np.ndarray
    beta: np.ndarray = field(repr=False)


def _quadrature(values, h):
    '''Trapezoid rule along axis 0 with spacing h'''
    d = trapezoid_weights(values.shape[0])
    return h * np.tensordot(d, values, axes=(0, 0))


def _legendre_beta(t):
    p1, p2 = legendre_pair(t)
    return p1 + p2


def truth_coefficients(basis, latent_grid):
    '''
    Basis coefficients of beta = P1 + P2 by trapezoid quadrature, and the
    L2 norm of what the basis misses.

    Parameters:
        basis (BasisSystem): The basis
        latent_grid (int): Quadrature points

    Returns:
        (np.ndarray, float): truth_c and ||beta - phi' truth_c||
    '''
    if latent_grid < 2:
        raise InvalidArgumentError('simbench: latent_grid must be >= 2')
    t = even_grid(latent_grid)
    h = 1.0 / (latent_grid - 1)
    beta = _legendre_beta(t)
    phi = eval_basis(basis, t)
    truth_c = _quadrature(phi * beta[:, None], h)
    resid = beta - phi @ truth_c
    return truth_c, float(np.sqrt(_quadrature(resid ** 2, h)))


@lru_cache(maxsize=16)
def _kernel_factor(scale, rate, size):
    t = even_grid(size)
    cov = scale * np.exp(-rate * np.abs(t[:, None] - t[None, :]))
    cov[np.diag_indices(size)] += _KERNEL_JITTER
    try:
        factor = linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as err:
        raise SingularSystemError(
            f'simbench: kernel matrix (scale={scale}, rate={rate}, L={size}) '
            'is not positive definite', penalty=_KERNEL_JITTER) from err
    factor.setflags(write=False)
    return factor


def simulate_dataset(cfg, which, rng, eta=None, beta=None):
    '''
    Draw the target or one source.

    Parameters:
        cfg (SimConfig): Settings
        which (str or int): ``'target'`` or the 1-based source index
        rng (np.random.Generator): Random stream
        eta (float): Source scale; defaults to the first of ``cfg.eta``
        beta (np.ndarray): Coefficient function on the latent grid; defaults
            to P1 + P2

    Returns:
        SimulatedData
    '''
    if which == 'target':
        scale, label = cfg.target_scale, 0
    elif isinstance(which, (int, np.integer)) and 1 <= which <= cfg.k_sources:
        scale, label = (cfg.eta[0] if eta is None else float(eta)), int(which)
    else:
        raise InvalidArgumentError(f'simbench: unknown dataset `{which}`')

    size = cfg.latent_size
    t = even_grid(size)
    beta = _legendre_beta(t) if beta is None else np.asarray(beta, float)
    if beta.shape != (size,):
        raise InvalidArgumentError(f'simbench: beta must have {size} values')

    x = _kernel_factor(float(scale), float(cfg.kernel_rate), size) @ \
        rng.standard_normal((size, cfg.n))
    y = _quadrature(x * beta[:, None], 1.0 / (size - 1))
    y = y + np.sqrt(cfg.noise_var_reg) * rng.standard_normal(cfg.n)
    obs = np.arange(0, size, cfg.stride)
    z = x[obs] + np.sqrt(cfg.noise_var_meas) * rng.standard_normal(
        (obs.size, cfg.n))
    raw = RawDataset(z, y, even_grid(cfg.j), id=label)
    return SimulatedData(raw=raw, x=x, latent_t=t, beta=beta)


def _ratio(num, den, what):
    if den == 0.0:
        raise DegenerateMetricError(f'simbench: {what} denominator is zero')
    return num / den


def ree(candidate, local, truth_c, target_train):
    '''
    Relative estimation error in the empirical-covariance norm of the
    training curves.

    Raises:
        DegenerateMetricError: if the local estimate equals the truth in
            that norm
    '''
    truth_c = np.asarray(truth_c, dtype=float)
    num = empirical_cov_norm_sq(
        CoefEstimate(candidate.c - truth_c, candidate.method,
                     candidate.basis), target_train)
    den = empirical_cov_norm_sq(
        CoefEstimate(local.c - truth_c, local.method, local.basis),
        target_train)
    return _ratio(num, den, 'REE')


def rpe(candidate, local, test):
    '''Relative prediction error on the test curves'''
    num = float(np.sum((test.y - predict(candidate, test)) ** 2))
    den = float(np.sum((test.y - predict(local, test)) ** 2))
    return _ratio(num, den, 'RPE')


def _split(n, train_frac, rng):
    n_train = int(round(train_frac * n))
    if n_train < 3 or n - n_train < 1:
        raise InvalidArgumentError(
            f'simbench: {n} subjects cannot be split {train_frac:g} / '
            f'{1 - train_frac:g}')
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _timed(fn, record):
    start = time.perf_counter()
    out = fn()
    elapsed = (time.perf_counter() - start) * 1e3
    return out, (elapsed if record else 0.0)


def _score(problem, methods, test, truth_c, record_time, base):
    '''
    Fit local and ``methods`` on ``problem`` and score them.

    Parameters:
        base (dict): replicate, eta and target fields of every row
    '''
    local, ms = _timed(lambda: problem.fit('local'), record_time)
    rows = [ResultRow(method='local', ree=None if truth_c is None else 1.0,
                      rpe=1.0, wall_ms=ms, **base)]
    for method in methods:
        try:
            est, ms = _timed(lambda: problem.fit(method), record_time)
            rows.append(ResultRow(
                method=method,
                ree=None if truth_c is None else ree(est, local, truth_c,
                                                     problem.target),
                rpe=rpe(est, local, test), wall_ms=ms, **base))
        except SofrError as err:
            logger.warning('replicate %d, target %s: %s failed: %s',
                           base['replicate'], base['target'], method, err)
            rows.append(ResultRow(method=method, ree=np.nan, rpe=np.nan,
                                  error=str(err), **base))
    return rows


def _replicate(cfg, eta, rep, truth_c, methods):
    # Same stream for every eta, so an eta sweep uses common random numbers
    rng = substream(cfg.seed, 'sim', rep)
    target = simulate_dataset(cfg, 'target', rng).raw
    sources = [simulate_dataset(cfg, k, rng, eta=eta).raw
               for k in range(1, cfg.k_sources + 1)]
    idx_train, idx_test = _split(cfg.n, cfg.train_frac,
                                 substream(cfg.seed, 'split', rep))
    base = {'replicate': rep, 'eta': eta, 'target': 0}
    try:
        problem = TransferProblem(target.subset(idx_train), sources,
                                  rho=cfg.rho, settings=cfg.settings(),
                                  seed=cfg.seed, stream_key=('rep', rep))
        test = problem.smooth_new(target.subset(idx_test))
        return _score(problem, methods, test, truth_c, cfg.record_time, base)
    except SofrError as err:
        logger.warning('replicate %d, eta %g failed: %s', rep, eta, err)
        return [ResultRow(method=m, ree=np.nan, rpe=np.nan, error=str(err),
                          **base) for m in ('local',) + tuple(methods)]


def _sorted_rows(rows):
    # eta is nan for observed data; nan does not order
    return sorted(rows, key=lambda r: (
        str(r.target), 0.0 if np.isnan(r.eta) else r.eta, r.replicate,
        r.method))


def run_experiment(cfg, methods=None):
    '''
    Run the simulation over every eta and replicate.

    Parameters:
        cfg (SimConfig): Settings
        methods (list of str): Transfer methods; defaults to ``cfg.methods``.
            The local baseline is always included.

    Returns:
        list of ResultRow: sorted by (eta, replicate, method)
    '''
    if methods is not None:
        cfg = replace(cfg, methods=tuple(methods))
    methods = tuple(cfg.methods)
    basis = fourier_basis(default_M(cfg.j))
    truth_c, residual = truth_coefficients(basis, cfg.latent_size)
    logger.info('simulation: M=%d, latent grid %d, truth projection residual '
                '%.3g', basis.M, cfg.latent_size, residual)

    tasks = [delayed(_replicate)(cfg, eta, rep, truth_c, methods)
             for eta in cfg.eta for rep in range(cfg.replications)]
    results = Parallel(n_jobs=int(cfg.n_jobs), prefer='processes')(tasks)
    return _sorted_rows([row for rows in results for row in rows])


def _cycle_one(datasets, k, rep, methods, seed, train_frac, rho, settings,
               center_data, record_time, basis):
    target = datasets[k]
    sources = [d for i, d in enumerate(datasets) if i != k]
    idx_train, idx_test = _split(target.n, train_frac,
                                 substream(seed, 'split', target.id, rep))
    base = {'replicate': rep, 'eta': np.nan, 'target': target.id}
    try:
        problem = TransferProblem(target.subset(idx_train), sources,
                                  basis=basis, rho=rho,
                                  center_data=center_data, settings=settings,
                                  seed=seed,
                                  stream_key=('cycle', target.id, rep))
        test = problem.smooth_new(target.subset(idx_test))
        return _score(problem, methods, test, None, record_time, base)
    except SofrError as err:
        logger.warning('replicate %d, target %s failed: %s', rep, target.id,
                       err)
        return [ResultRow(method=m, ree=None, rpe=np.nan, error=str(err),
                          **base) for m in ('local',) + tuple(methods)]


def run_cycle(datasets, methods, replications=1, seed=0, train_frac=0.8,
              rho=None, settings=None, center_data=True, n_jobs=1,
              record_time=False, basis=None):
    '''
    Leave-one-out cycling: every dataset in turn is the target and the rest
    are its sources. The target is split into training and test subjects;
    only RPE is reported since the truth is unknown.

    Parameters:
        datasets (list of RawDataset): At least two datasets on one grid,
            with distinct ids
        methods (list of str): Transfer methods besides local
        replications (int): Random splits per target
        seed (int): Run seed
        train_frac (float): Share of each target used for training
        rho (float): Fixed smoothing parameter, None for GCV
        settings (FitSettings): Estimator tuning
        center_data (bool): Remove sample means (training means for the test
            split). Defaults to True.
        n_jobs (int): joblib workers

    Returns:
        list of ResultRow: sorted by (target, replicate, method)
    '''
    if len(datasets) < 2:
        raise InvalidArgumentError('simbench: cycling needs at least two '
                                   'datasets')
    if len({str(d.id) for d in datasets}) != len(datasets):
        raise InvalidArgumentError('simbench: dataset ids must be distinct')
    unknown = set(methods) - set(_TRANSFER_METHODS)
    if unknown:
        raise InvalidArgumentError(f'simbench: unknown methods '
                                   f'{sorted(unknown)}')
    settings = settings if settings is not None else FitSettings()
    tasks = [delayed(_cycle_one)(datasets, k, rep, tuple(methods), seed,
                                 train_frac, rho, settings, center_data,
                                 record_time, basis)
             for k in range(len(datasets)) for rep in range(replications)]
    results = Parallel(n_jobs=int(n_jobs), prefer='processes')(tasks)
    return _sorted_rows([row for rows in results for row in rows])


def rows_frame(rows, with_target=False):
    '''
    Results as a DataFrame with the results-CSV columns.

    Parameters:
        rows (list of ResultRow)
        with_target (bool): Add the ``target`` column first

    Returns:
        pd.DataFrame
    '''
    columns = (['target'] if with_target else []) + RESULT_COLUMNS
    frame = pd.DataFrame([asdict(r) for r in rows],
                         columns=list(ResultRow.__dataclass_fields__))
    return frame[columns]


def summarize(rows, by='eta'):
    '''
    Per-method median REE and RPE.

    Parameters:
        rows (list of ResultRow)
        by (str): ``eta`` for simulations, ``target`` for cycling

    Returns:
        pd.DataFrame: columns <by>, method, median_ree, median_rpe, n; failed
            rows are left out
    '''
    frame = pd.DataFrame([asdict(r) for r in rows if r.error is None],
                         columns=list(ResultRow.__dataclass_fields__))
    frame['ree'] = pd.to_numeric(frame['ree'], errors='coerce')
    grouped = frame.groupby([by, 'method'], sort=True)
    summary = grouped.agg(median_ree=('ree', 'median'),
                          median_rpe=('rpe', 'median'),
                          n=('rpe', 'size')).reset_index()
    return summary
