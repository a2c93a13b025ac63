"""Transfer Learning for Scalar-on-Function Regression

Command-line driver with three commands:

    * fit - fit the requested estimators on a target and its sources read
        from csv files; writes the coefficients and a run manifest
    * bench - run the simulation benchmark; writes the result rows, the
        per-method medians and a run manifest
    * cycle - leave-one-out cycling over observed datasets, each one in turn
        the target; writes the same outputs as bench with a target column

Every command reads a flat ``key = value`` config (see lib/config.py).
Exit codes: 0 success, 1 numerical failure, 2 configuration or IO failure.

Usage::
    python -m scripts.sofr_exec fit -c fit.cfg
    python -m scripts.sofr_exec bench -c bench.cfg -v

"""

import getopt
import logging
import sys
from dataclasses import replace

from lib import datagather as datag
from lib.basis import default_M, fourier_basis
from lib.config import load_bench_config, load_run_config
from lib.errors import ConfigError, SofrError
from lib.pipeline import TransferProblem
from lib.simbench import run_cycle, run_experiment, summarize, \
    truth_coefficients
from lib.writer import write_manifest

logger = logging.getLogger('sofr')

_HELP = ('sofr_exec.py <fit|bench|cycle> -c <config> [-v]\n'
         '    -c, --config   config file\n'
         '    -v, --verbose  debug logging')
_MANIFEST_HEADER = '''
    Run manifest. The config values below, together with the input files,
    determine every number in the output.
'''


class bcolours:  # Class for terminal output colours
    OKGREEN = '\033[92m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'


def _banner(text, colour):
    pad = 70 - len(text)
    print(f'{"<"*5}{"-"*5}{" "*(pad // 2)}{colour}{text}{bcolours.ENDC}'
          f'{" "*(pad - pad // 2)}{"-"*5}{">"*5}')


def _load_all(cfg):
    target = datag.load_dataset(cfg.target_z, cfg.target_y, id=0)
    sources = [datag.load_dataset(z, y, id=k)
               for k, (z, y) in enumerate(cfg.sources, start=1)]
    return target, sources


def _basis(cfg, target):
    return fourier_basis(cfg.n_basis) if cfg.n_basis is not None else \
        fourier_basis(default_M(target.J))


def cmd_fit(config_path):
    '''
    Fit every configured method and write ``<output>`` (method,
    basis_index, coefficient) plus ``<output>.manifest``.
    '''
    cfg = load_run_config(config_path)
    if not cfg.sources and any(m != 'local' for m in cfg.methods):
        raise ConfigError('transfer methods need at least one source',
                          key='sources')
    target, sources = _load_all(cfg)
    problem = TransferProblem(target, sources, basis=_basis(cfg, target),
                              rho=cfg.rho, center_data=cfg.center,
                              settings=cfg.settings(), seed=cfg.seed)
    estimates = []
    for method in cfg.methods:
        logger.info('Fitting %s', method)
        estimates.append(problem.fit(method))

    datag.write_coefficients(estimates, cfg.output)
    sections = {'config': cfg.manifest()}
    sections.update(problem.manifest())
    write_manifest(f'{cfg.output}.manifest', sections,
                   header=_MANIFEST_HEADER)


def cmd_bench(config_path):
    '''
    Run the simulation benchmark; writes ``<output>``,
    ``<output stem>_summary.csv`` and ``<output>.manifest``.
    '''
    bench = load_bench_config(config_path)
    sim = bench.sim
    rows = run_experiment(sim)
    datag.write_results(rows, bench.output)
    datag.write_summary(summarize(rows, by='eta'),
                        datag.summary_path(bench.output))

    _, residual = truth_coefficients(fourier_basis(default_M(sim.j)),
                                     sim.latent_size)
    failures = {f'{r.method}_eta{r.eta:g}_rep{r.replicate}': r.error
                for r in rows if r.error is not None}
    sections = {'config': bench.manifest(),
                'truth': {'projection_residual': residual}}
    if failures:
        logger.warning('%d method fits failed; see the manifest',
                       len(failures))
        sections['failures'] = failures
    write_manifest(f'{bench.output}.manifest', sections,
                   header=_MANIFEST_HEADER)


def cmd_cycle(config_path):
    '''
    Leave-one-out cycling over the target and source files; writes the
    result rows with a target column, the per-target medians and a manifest.
    '''
    cfg = load_run_config(config_path)
    if not cfg.sources:
        raise ConfigError('cycling needs at least one source', key='sources')
    if cfg.transferable is not None:
        logger.warning('transferable is ignored when cycling; O-TL pools '
                       'every other dataset')
    target, sources = _load_all(cfg)
    datasets = [target] + sources
    methods = tuple(m for m in cfg.methods if m != 'local')
    rows = run_cycle(datasets, methods, replications=cfg.replications,
                     seed=cfg.seed, train_frac=cfg.train_frac, rho=cfg.rho,
                     settings=replace(cfg.settings(), transferable=None),
                     center_data=cfg.center, n_jobs=cfg.n_jobs,
                     record_time=cfg.record_time,
                     basis=_basis(cfg, target))
    datag.write_results(rows, cfg.output, with_target=True)
    datag.write_summary(summarize(rows, by='target'),
                        datag.summary_path(cfg.output))
    sections = {'config': cfg.manifest()}
    failures = {f'{r.method}_target{r.target}_rep{r.replicate}': r.error
                for r in rows if r.error is not None}
    if failures:
        sections['failures'] = failures
    write_manifest(f'{cfg.output}.manifest', sections,
                   header=_MANIFEST_HEADER)


_COMMANDS = {'fit': cmd_fit, 'bench': cmd_bench, 'cycle': cmd_cycle}


def main(argv):
    '''
    Run one command.

    Args:
        argv (list of str): Command line without the program name

    Returns:
        int: Exit code
    '''
    if not argv or argv[0] in ('-h', '--help'):
        print(_HELP)
        return 0 if argv else 2
    command, rest = argv[0], argv[1:]
    if command not in _COMMANDS:
        print(f'Unrecognised command `{command}`')
        print(_HELP)
        return 2
    try:
        opts, args = getopt.getopt(rest, 'hvc:', ['help', 'verbose',
                                                  'config='])
    except getopt.GetoptError as err:
        print(err)
        print(_HELP)
        return 2

    config_path, verbose = None, False
    for opt, arg in opts:
        if opt in ('-h', '--help'):
            print(_HELP)
            return 0
        elif opt in ('-v', '--verbose'):
            verbose = True
        elif opt in ('-c', '--config'):
            config_path = arg
    if config_path is None or args:
        print('A single -c <config> is required')
        print(_HELP)
        return 2

    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s: '
                               '%(message)s')

    print(f'\n{"~"*80}\n')
    _banner(f'{command} starting', bcolours.OKGREEN)
    try:
        _COMMANDS[command](config_path)
    except (ConfigError, OSError) as err:
        _banner(f'{command} failed', bcolours.FAIL)
        print(f'{bcolours.FAIL}{err}{bcolours.ENDC}', file=sys.stderr)
        return 2
    except SofrError as err:
        _banner(f'{command} failed', bcolours.FAIL)
        print(f'{bcolours.FAIL}{err}{bcolours.ENDC}', file=sys.stderr)
        return 1
    _banner(f'{command} complete', bcolours.OKGREEN)
    print(f'\n{"~"*80}\n')
    return 0


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
