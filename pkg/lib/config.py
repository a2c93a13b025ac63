# -*- coding: utf-8 -*-
"""Configuration

Flat ``key = value`` run files. ``#`` starts a comment, blank lines are
ignored, and every problem is reported with its line number and key:

    # fit.cfg
    target_z = data/target_z.csv
    target_y = data/target_y.csv
    sources = data/s1_z.csv:data/s1_y.csv, data/s2_z.csv:data/s2_y.csv
    method = all
    lambda = cv
    seed = 7

Relative paths are resolved against the directory of the config file.

This file contains the following:

    * read_config - parse a file into {key: (value, line)}
    * RunConfig / load_run_config - settings of the fit and cycle commands
    * BenchConfig / load_bench_config - settings of the bench command

"""

import logging
import os.path
from dataclasses import dataclass

import numpy as np

from lib.errors import ConfigError, InvalidArgumentError
from lib.estimators import VARIANCE_MODES
from lib.pipeline import FitSettings
from lib.simbench import SimConfig
from lib.smoothing import METHODS

logger = logging.getLogger(__name__)

# Module global variables
_DEFAULT_ALPHA = 0.05
_DEFAULT_TRAIN_FRAC = 0.8
_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')

_RUN_KEYS = ('target_z', 'target_y', 'sources', 'rho', 'lambda', 'zeta',
             'alpha', 'method', 'seed', 'variance_mode', 'output', 'center',
             'transferable', 'n_basis', 'replications', 'n_jobs',
             'train_frac', 'record_time')
_BENCH_KEYS = ('n', 'j', 'k_sources', 'eta', 'target_scale', 'kernel_rate',
               'noise_var_meas', 'noise_var_reg', 'replications', 'seed',
               'train_frac', 'latent_grid', 'methods', 'output', 'rho',
               'lambda', 'zeta', 'alpha', 'variance_mode', 'n_jobs',
               'record_time')


def read_config(path):
    '''
    Parse a config file.

    Parameters:
        path (str): Config file

    Returns:
        dict: key -> (raw value string, 1-based line number)

    Raises:
        ConfigError: unreadable file, a line without ``=``, an empty key or a
            repeated key
    '''
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
    except OSError as err:
        raise ConfigError(f'cannot read config file {path}: {err}') from err

    entries = {}
    for number, line in enumerate(lines, start=1):
        text = line.split('#', 1)[0].strip()
        if not text:
            continue
        if '=' not in text:
            raise ConfigError(f'expected `key = value`, got `{text}`',
                              line=number)
        key, value = (part.strip() for part in text.split('=', 1))
        if not key:
            raise ConfigError('empty key', line=number)
        if key in entries:
            raise ConfigError(f'repeated (first on line {entries[key][1]})',
                              key=key, line=number)
        entries[key] = (value, number)
    return entries


class _Entries(object):
    '''Typed access to parsed entries, with key/line in every error'''

    def __init__(self, entries, allowed, base_dir):
        for key, (_, line) in entries.items():
            if key not in allowed:
                raise ConfigError('unknown key', key=key, line=line)
        self._entries = entries
        self._base_dir = base_dir

    def _fail(self, key, message):
        line = self._entries[key][1] if key in self._entries else None
        return ConfigError(message, key=key, line=line)

    def raw(self, key, default=None):
        entry = self._entries.get(key)
        return default if entry is None else entry[0]

    def required(self, key):
        if key not in self._entries or not self._entries[key][0]:
            raise self._fail(key, 'missing required value')
        return self._entries[key][0]

    def number(self, key, default, kind=float, low=None, low_open=False,
               high=None, high_open=False, keywords=()):
        '''
        Numeric value with range checks. A value in ``keywords`` maps to
        None (e.g. ``lambda = cv``).
        '''
        value = self.raw(key)
        if value is None or value == '':
            return default
        if value.lower() in keywords:
            return None
        try:
            number = kind(value)
        except ValueError:
            expected = 'an integer' if kind is int else 'a number'
            if keywords:
                expected += f' or {" / ".join(keywords)}'
            raise self._fail(key, f'expected {expected}, got `{value}`')
        if kind is float and not np.isfinite(number):
            raise self._fail(key, f'must be finite, got {value}')
        if low is not None and (number < low or (low_open and number == low)):
            raise self._fail(key, f'must be {">" if low_open else ">="} '
                                  f'{low}, got {value}')
        if high is not None and (number > high or
                                 (high_open and number == high)):
            raise self._fail(key, f'must be {"<" if high_open else "<="} '
                                  f'{high}, got {value}')
        return number

    def numbers(self, key, default, kind=float, low=None, low_open=False):
        '''Comma-separated list of numbers'''
        value = self.raw(key)
        if value is None or value == '':
            return default
        out = []
        for part in value.split(','):
            part = part.strip()
            try:
                number = kind(part)
            except ValueError:
                raise self._fail(key, f'expected a list of numbers, got '
                                      f'`{part}`')
            if kind is float and not np.isfinite(number):
                raise self._fail(key, f'every value must be finite, got '
                                      f'{part}')
            if low is not None and (number < low or
                                    (low_open and number == low)):
                raise self._fail(key, f'every value must be '
                                      f'{">" if low_open else ">="} {low}, '
                                      f'got {part}')
            out.append(number)
        return tuple(out)

    def jobs(self, key, default):
        '''joblib worker count: positive, or negative to count back from
        the number of CPUs'''
        number = self.number(key, default, kind=int)
        if number == 0:
            raise self._fail(key, 'must not be 0')
        return number

    def choice(self, key, options, default):
        value = self.raw(key)
        if value is None or value == '':
            return default
        if value not in options:
            raise self._fail(key, f'expected one of {", ".join(options)}, got '
                                  f'`{value}`')
        return value

    def flag(self, key, default):
        value = self.raw(key)
        if value is None or value == '':
            return default
        if value.lower() in _TRUE:
            return True
        if value.lower() in _FALSE:
            return False
        raise self._fail(key, f'expected true or false, got `{value}`')

    def methods(self, key, allowed, default, allow_all=True):
        value = self.raw(key)
        if value is None or value == '':
            return default
        if allow_all and value == 'all':
            return tuple(allowed)
        methods = tuple(m.strip() for m in value.split(',') if m.strip())
        for m in methods:
            if m not in allowed:
                raise self._fail(key, f'unknown method `{m}` (expected '
                                      f'{", ".join(allowed)})')
        return methods

    def path(self, key, value=None, must_exist=True):
        value = self.required(key) if value is None else value
        path = value if os.path.isabs(value) else os.path.normpath(
            os.path.join(self._base_dir, value))
        if must_exist and not os.path.isfile(path):
            raise self._fail(key, f'file not found: {path}')
        return path

    def sources(self, key):
        '''``z:y`` path pairs, comma separated'''
        value = self.raw(key)
        if value is None or value == '':
            return ()
        pairs = []
        for part in value.split(','):
            part = part.strip()
            if part.count(':') != 1:
                raise self._fail(key, f'expected `z_path:y_path`, got '
                                      f'`{part}`')
            z, y = (p.strip() for p in part.split(':'))
            pairs.append((self.path(key, z), self.path(key, y)))
        return tuple(pairs)


@dataclass(frozen=True)
class RunConfig:
    '''
    Settings of the ``fit`` and ``cycle`` commands.

    Attributes:
        target_z, target_y (str): Target dataset files
        sources (tuple of (str, str)): Source (Z, Y) file pairs
        rho (float): Smoothing parameter, None for GCV
        lam (float): Ridge penalty, None for CV
        zeta (float): Group-lasso penalty, None for validation
        alpha (float): Aggregation confidence level
        methods (tuple of str): Methods to fit
        seed (int): Run seed
        variance_mode (str): homoskedastic or hc
        output (str): Output CSV
        center (bool): Center every dataset by its sample means
        transferable (tuple of int): 1-based O-TL sources, None for all
        n_basis (int): Basis size, None for the grid default
        replications (int): Random splits per target (cycle)
        n_jobs (int): joblib workers (cycle)
        train_frac (float): Training share of each target (cycle)
        record_time (bool): Write wall times (cycle)
    '''
    target_z: str
    target_y: str
    sources: tuple
    output: str
    rho: float = None
    lam: float = None
    zeta: float = None
    alpha: float = _DEFAULT_ALPHA
    methods: tuple = METHODS
    seed: int = 0
    variance_mode: str = 'homoskedastic'
    center: bool = True
    transferable: tuple = None
    n_basis: int = None
    replications: int = 1
    n_jobs: int = 1
    train_frac: float = _DEFAULT_TRAIN_FRAC
    record_time: bool = False

    def settings(self):
        return FitSettings(lam=self.lam, zeta=self.zeta, alpha=self.alpha,
                           variance_mode=self.variance_mode,
                           transferable=self.transferable)

    def manifest(self):
        '''Resolved configuration as a manifest section'''
        return {'target_z': self.target_z, 'target_y': self.target_y,
                'sources': [f'{z}:{y}' for z, y in self.sources],
                'rho': 'gcv' if self.rho is None else self.rho,
                'lambda': 'cv' if self.lam is None else self.lam,
                'zeta': 'path' if self.zeta is None else self.zeta,
                'alpha': self.alpha, 'method': list(self.methods),
                'seed': self.seed, 'variance_mode': self.variance_mode,
                'center': self.center,
                'transferable': 'all' if self.transferable is None
                else list(self.transferable),
                'n_basis': 'default' if self.n_basis is None else self.n_basis,
                'replications': self.replications,
                'train_frac': self.train_frac}


def _base_dir(path):
    return os.path.dirname(os.path.abspath(path))


def load_run_config(path):
    '''
    Load and validate a fit/cycle config.

    Raises:
        ConfigError: with the key and line of the first bad entry
    '''
    e = _Entries(read_config(path), _RUN_KEYS, _base_dir(path))
    transferable = e.numbers('transferable', None, kind=int, low=1)
    cfg = RunConfig(
        target_z=e.path('target_z'),
        target_y=e.path('target_y'),
        sources=e.sources('sources'),
        output=e.path('output', must_exist=False),
        rho=e.number('rho', None, low=0.0, keywords=('gcv',)),
        lam=e.number('lambda', None, low=0.0, low_open=True,
                     keywords=('cv',)),
        zeta=e.number('zeta', None, low=0.0, keywords=('path',)),
        alpha=e.number('alpha', _DEFAULT_ALPHA, low=0.0, low_open=True,
                       high=1.0, high_open=True),
        methods=e.methods('method', METHODS, METHODS),
        seed=e.number('seed', 0, kind=int),
        variance_mode=e.choice('variance_mode', VARIANCE_MODES,
                               'homoskedastic'),
        center=e.flag('center', True),
        transferable=transferable,
        n_basis=e.number('n_basis', None, kind=int, low=1),
        replications=e.number('replications', 1, kind=int, low=1),
        n_jobs=e.jobs('n_jobs', 1),
        train_frac=e.number('train_frac', _DEFAULT_TRAIN_FRAC, low=0.0,
                            low_open=True, high=1.0, high_open=True),
        record_time=e.flag('record_time', False))
    if transferable is not None and max(transferable) > len(cfg.sources):
        raise e._fail('transferable', f'source index {max(transferable)} '
                                      f'but only {len(cfg.sources)} sources')
    logger.debug('loaded run config %s', path)
    return cfg


@dataclass(frozen=True)
class BenchConfig:
    '''
    Attributes:
        sim (SimConfig): Simulation settings
        output (str): Results CSV
    '''
    sim: SimConfig
    output: str

    def manifest(self):
        sim = self.sim
        out = {k: getattr(sim, k) for k in sim.__dataclass_fields__}
        out['eta'] = list(sim.eta)
        out['methods'] = list(sim.methods)
        for key, word in (('rho', 'gcv'), ('lam', 'cv'), ('zeta', 'path')):
            if out[key] is None:
                out[key] = word
        out['latent_size'] = sim.latent_size
        return out


def load_bench_config(path):
    '''
    Load and validate a bench config; defaults follow ``SimConfig``.

    Raises:
        ConfigError: with the key and line of the first bad entry
    '''
    e = _Entries(read_config(path), _BENCH_KEYS, _base_dir(path))
    d = SimConfig()
    transfer = tuple(m for m in METHODS if m != 'local')
    values = dict(
        n=e.number('n', d.n, kind=int, low=1),
        j=e.number('j', d.j, kind=int, low=2),
        k_sources=e.number('k_sources', d.k_sources, kind=int, low=1),
        eta=e.numbers('eta', d.eta, low=0.0, low_open=True),
        target_scale=e.number('target_scale', d.target_scale, low=0.0,
                              low_open=True),
        kernel_rate=e.number('kernel_rate', d.kernel_rate, low=0.0,
                             low_open=True),
        noise_var_meas=e.number('noise_var_meas', d.noise_var_meas,
                                low=0.0),
        noise_var_reg=e.number('noise_var_reg', d.noise_var_reg, low=0.0),
        replications=e.number('replications', d.replications, kind=int,
                              low=1),
        seed=e.number('seed', d.seed, kind=int),
        train_frac=e.number('train_frac', d.train_frac, low=0.0,
                            low_open=True, high=1.0, high_open=True),
        latent_grid=e.number('latent_grid', d.latent_grid, kind=int, low=2),
        methods=e.methods('methods', transfer, d.methods),
        rho=e.number('rho', None, low=0.0, keywords=('gcv',)),
        lam=e.number('lambda', None, low=0.0, low_open=True,
                     keywords=('cv',)),
        zeta=e.number('zeta', None, low=0.0, keywords=('path',)),
        alpha=e.number('alpha', d.alpha, low=0.0, low_open=True, high=1.0,
                       high_open=True),
        variance_mode=e.choice('variance_mode', VARIANCE_MODES,
                               d.variance_mode),
        n_jobs=e.jobs('n_jobs', d.n_jobs),
        record_time=e.flag('record_time', d.record_time))
    try:
        sim = SimConfig(**values)
    except InvalidArgumentError as err:
        raise ConfigError(str(err)) from err
    return BenchConfig(sim=sim, output=e.path('output', must_exist=False))

