"""Transfer Problem

Holds a target dataset and its sources smoothed on one basis, and fits the
transfer estimators over them:

    * local - target-only penalized fit
    * otl - offset transfer with a known transferable set
    * aotl - aggregated offset transfer
    * cvs - control variates
    * pcvs - penalized control variates

Local fits are cached, so asking for several methods smooths and fits each
dataset once.

"""

import logging
from dataclasses import dataclass

import numpy as np

from lib import aotl as ao
from lib import cvs
from lib import pcvs
from lib.basis import default_M, fourier_basis
from lib.errors import InvalidArgumentError
from lib.estimators import VARIANCE_MODES, LambdaPolicy, fit_local, \
    fit_offset, fit_pooled
from lib.smoothing import METHODS, center, select_rho, smooth
from lib.utils import substream

logger = logging.getLogger(__name__)

# Module global variables
_DEFAULT_ALPHA = 0.05
_ZETA_VALIDATION_FRAC = 0.25
_MANIFEST_SKIP = ('offset', 'delta_zeta')


@dataclass(frozen=True)
class FitSettings:
    '''
    Tuning of the estimators.

    Attributes:
        lam (float): Fixed ridge penalty for every fit; None for 5-fold CV
        zeta (float): Fixed group-lasso penalty; None to pick it on a
            validation split of the target
        alpha (float): Aggregation confidence level
        variance_mode (str): homoskedastic or hc
        transferable (tuple of int): 1-based sources used by O-TL; None for
            all of them
        folds (int): CV folds
        tol (float): Group-lasso KKT tolerance, relative to max(1, zeta_max)
        max_iter (int): Group-lasso iteration cap
    '''
    lam: float = None
    zeta: float = None
    alpha: float = _DEFAULT_ALPHA
    variance_mode: str = 'homoskedastic'
    transferable: tuple = None
    folds: int = 5
    tol: float = 1e-8
    max_iter: int = 50000

    def __post_init__(self):
        if self.variance_mode not in VARIANCE_MODES:
            raise InvalidArgumentError(
                f'pipeline: unknown variance_mode `{self.variance_mode}`')
        if self.zeta is not None and not 0 <= self.zeta < np.inf:
            raise InvalidArgumentError('pipeline: zeta must be finite and '
                                       '>= 0')
        if self.lam is not None and not 0 < self.lam < np.inf:
            raise InvalidArgumentError('pipeline: lambda must be finite and '
                                       '> 0')

    @property
    def policy(self):
        return LambdaPolicy(lam=self.lam, folds=self.folds)


class TransferProblem():
    '''
    A target and its sources, smoothed on one Fourier basis

    Usage::
        from lib.pipeline import TransferProblem
        tp = TransferProblem(target_raw, [src1_raw, src2_raw], seed=7)
        est = tp.fit('cvs')
        sections = tp.manifest()

    Class public methods:
        * fit: Fit one method and return its CoefEstimate
        * fit_all: Fit several methods
        * local_fit: Cached local fit of the target (0) or a source (1..K)
        * smooth_new: Smooth new target curves (e.g. a test split) with the
            target's smoother and centring
        * manifest: Resolved tuning values of every fit made so far
    '''

    def __init__(self, target, sources, basis=None, rho=None,
                 center_data=False, settings=None, seed=0, stream_key=()):
        '''
        Args:
            target (RawDataset): Target observations
            sources (list of RawDataset): Source observations, K >= 0

        Optional:
        Args:
            basis (BasisSystem): Defaults to the Fourier basis of size
                ``default_M(J)``
            rho (float): Fixed smoothing parameter; None for GCV per dataset
            center_data (bool): Remove sample means from every dataset first.
                Defaults to False.
            settings (FitSettings): Defaults to ``FitSettings()``
            seed (int): Run seed; every random choice uses a named sub-stream
            stream_key (tuple): Prefix for the sub-stream names

        Raises:
            InvalidArgumentError: if the datasets have different grids
        '''
        for raw in sources:
            if raw.J != target.J or not np.array_equal(raw.grid, target.grid):
                raise InvalidArgumentError(
                    f'pipeline: source {raw.id} grid (J={raw.J}) differs '
                    f'from the target grid (J={target.J})')
        self.basis = basis if basis is not None else fourier_basis(
            default_M(target.J))
        self.settings = settings if settings is not None else FitSettings()
        self.seed = seed
        self._key = tuple(stream_key)
        self._means = None
        self._local = {}
        self._fits = {}

        raws = [target] + list(sources)
        if center_data:
            centred = [center(raw) for raw in raws]
            self._means = centred[0][1]
            raws = [c[0] for c in centred]
        self.smoothed = [self._smooth(raw, rho) for raw in raws]

    def __len__(self):
        '''Number of sources K'''
        return len(self.smoothed) - 1

    @property
    def target(self):
        return self.smoothed[0]

    @property
    def sources(self):
        return self.smoothed[1:]

    def _rng(self, *names):
        return substream(self.seed, *self._key, *names)

    def _smooth(self, raw, rho):
        if rho is None:
            rho, _ = select_rho(raw, self.basis)
            logger.debug('dataset %s: GCV rho=%g', raw.id, rho)
        return smooth(raw, self.basis, rho)

    def smooth_new(self, raw):
        '''
        Smooth new curves of the target with the target's rho and centring
        (training means when the problem was centred).

        Args:
            raw (RawDataset): Curves on the target grid

        Returns:
            SmoothedDataset
        '''
        if self._means is not None:
            raw, _ = center(raw, self._means)
        return smooth(raw, self.basis, self.target.rho)

    def local_fit(self, k=0):
        '''
        Cached local fit of dataset ``k`` (0 = target).

        Returns:
            LocalFit
        '''
        if k not in self._local:
            sm = self.smoothed[k]
            lam = self.settings.policy.local(sm, self._rng('cv', 'local', k))
            self._local[k] = fit_local(sm, lam, self.settings.variance_mode)
        return self._local[k]

    def _transferable(self):
        members = self.settings.transferable
        if members is None:
            return list(range(1, len(self) + 1))
        members = sorted(set(int(m) for m in members))
        if not members or members[0] < 1 or members[-1] > len(self):
            raise InvalidArgumentError(
                f'pipeline: transferable set {members} is not a nonempty '
                f'subset of 1..{len(self)}')
        return members

    def _need_sources(self, method):
        if len(self) == 0:
            raise InvalidArgumentError(f'pipeline: method `{method}` needs '
                                       'at least one source')

    def _fit_otl(self):
        policy = self.settings.policy
        members = self._transferable()
        pool = [self.smoothed[m] for m in members]
        pooled = fit_pooled(pool, policy.pooled(pool, self._rng('cv',
                                                                'pooled')))
        est = fit_offset(pooled, self.target,
                         policy.offset(pooled, self.target,
                                       self._rng('cv', 'offset')))
        est.info['transferable'] = members
        return est

    def _fit_aotl(self):
        source_fits = [self.local_fit(k).estimate()
                       for k in range(1, len(self) + 1)]
        return ao.run_aotl(self.target, self.sources, self.settings.policy,
                           self._rng('aotl-split'),
                           alpha=self.settings.alpha,
                           source_fits=source_fits,
                           variance_mode=self.settings.variance_mode)

    def _all_fits(self):
        return [self.local_fit(k) for k in range(len(self) + 1)]

    def _fit_cvs(self):
        fits = self._all_fits()
        return cvs.cvs_estimate(cvs.assemble_cvs(fits), fits[0])

    def _select_zeta_ratio(self):
        '''
        Pick zeta / zeta_max on a validation split of the target training
        data; the local fits of the sources are reused.
        '''
        n = self.target.n
        n_val = int(round(_ZETA_VALIDATION_FRAC * n))
        if n_val < 1 or n - n_val < 2:
            raise InvalidArgumentError(
                f'pipeline: target too small ({n}) to select zeta')
        perm = self._rng('zeta-split').permutation(n)
        idx_val, idx_fit = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        part = self.target.subset(idx_fit)
        held = self.target.subset(idx_val)

        lam = self.settings.policy.local(part, self._rng('cv', 'zeta'))
        fits = [fit_local(part, lam, self.settings.variance_mode)] + \
            self._all_fits()[1:]
        system = cvs.assemble_cvs(fits)
        q = cvs.delta_precision(fits)
        zmax = pcvs.zeta_max(q, system.delta_hat, system.M)
        if zmax == 0.0:
            return 0.0
        path = pcvs.zeta_path(system, q, fits[0], pcvs.zeta_grid(zmax),
                              tol=self.settings.tol * max(1.0, zmax),
                              max_iter=self.settings.max_iter)
        errors = [float(np.mean((held.y - held.features.T @ est.c) ** 2))
                  for _, est, _ in path]
        best = int(np.argmin(errors))
        logger.debug('zeta selection: ratio %.4g (validation MSE %.4g)',
                     path[best][0] / zmax, errors[best])
        return path[best][0] / zmax

    def _fit_pcvs(self):
        fits = self._all_fits()
        system = cvs.assemble_cvs(fits)
        q = cvs.delta_precision(fits)
        zmax = pcvs.zeta_max(q, system.delta_hat, system.M)
        zeta = self.settings.zeta
        selected = zeta is None
        if selected:
            zeta = self._select_zeta_ratio() * zmax
        est = pcvs.pcvs_estimate(system, q, fits[0], zeta,
                                 tol=self.settings.tol * max(1.0, zmax),
                                 max_iter=self.settings.max_iter)
        est.info.update({'zeta_max': zmax, 'zeta_selected': selected})
        return est

    def fit(self, method):
        '''
        Fit one method.

        Args:
            method (str): One of local, otl, aotl, cvs, pcvs

        Returns:
            CoefEstimate

        Raises:
            InvalidArgumentError: for an unknown method or a transfer method
                without sources
        '''
        if method not in METHODS:
            raise InvalidArgumentError(f'pipeline: unknown method `{method}`')
        if method in self._fits:
            return self._fits[method]
        if method == 'local':
            est = self.local_fit(0).estimate()
        else:
            self._need_sources(method)
            est = getattr(self, f'_fit_{method}')()
        logger.debug('fitted %s', method)
        self._fits[method] = est
        return est

    def fit_all(self, methods):
        '''
        Fit every method in ``methods``, in order.

        Returns:
            dict: method -> CoefEstimate
        '''
        return {m: self.fit(m) for m in methods}

    def manifest(self):
        '''
        Resolved tuning values of the fits made so far, as manifest sections.

        Returns:
            dict: section name -> dict of key/values
        '''
        data = {'M': self.basis.M, 'J': self.target.raw.J,
                'n_sources': len(self), 'seed': self.seed,
                'centred': self._means is not None,
                'variance_mode': self.settings.variance_mode}
        for k, sm in enumerate(self.smoothed):
            data[f'dataset_{k}'] = (f'id={sm.raw.id} n={sm.n} '
                                    f'rho={float(sm.rho)!r}')
        sections = {'problem': data}

        local = {}
        for k in sorted(self._local):
            fit = self._local[k]
            local[f'lambda_{k}'] = fit.lam
            local[f'sigma2_eps_{k}'] = fit.sigma2_eps
            local[f'sigma2_err_{k}'] = fit.sigma2_err
            if fit.jitter > 0:
                local[f'jitter_{k}'] = fit.jitter
        if local:
            sections['local_fits'] = local

        for method, est in self._fits.items():
            if method == 'local':
                continue
            sections[method] = {key: _manifest_value(value)
                                for key, value in est.info.items()
                                if key not in _MANIFEST_SKIP}
        return sections


def _manifest_value(value):
    '''Nested candidate sets are written as `1; 1, 3; ...`'''
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)) and value \
            and isinstance(value[0], (list, tuple)):
        return '; '.join(', '.join(str(v) for v in part) for part in value)
    return value
