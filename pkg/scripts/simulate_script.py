"""Simulated Data Writing

This script draws one replicate of the simulation benchmark (the target and
every source) and saves each dataset as a Z/Y csv pair in the given folder,
then writes a ``fit.cfg`` next to them so the fit command can be run on the
data straight away:

    python -m scripts.simulate_script -c bench.cfg -o ./data -r 0 -e 100
    python -m scripts.sofr_exec fit -c ./data/fit.cfg

The random stream is the one the benchmark uses for the same seed and
replicate, so the saved data are exactly the data of that replicate (before
the training/test split).

"""

import getopt
import os.path
import sys

from lib import datagather as datag
from lib.config import load_bench_config
from lib.simbench import simulate_dataset
from lib.utils import substream

_HELP = 'simulate_script.py -c <bench config> -o <out dir> [-r <replicate>] ' \
    '[-e <eta>]'


class bcolours:  # Class for terminal output colours
    OKGREEN = '\033[92m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'


def write_replicate(sim, out_dir, replicate=0, eta=None):
    '''
    Draws and saves one replicate.

    Parameters:
        sim (SimConfig): Simulation settings
        out_dir (str): Folder for the csv files and fit.cfg
        replicate (int): Replicate index. Defaults to 0
        eta (float): Source scale; defaults to the first configured eta

    Returns:
        str: Path of the written fit.cfg
    '''
    eta = sim.eta[0] if eta is None else float(eta)
    rng = substream(sim.seed, 'sim', replicate)
    names = ['target'] + [f'source{k}' for k in range(1, sim.k_sources + 1)]
    pairs = []
    for k, name in enumerate(names):
        which = 'target' if k == 0 else k
        raw = simulate_dataset(sim, which, rng, eta=eta).raw
        z_name, y_name = f'{name}_z.csv', f'{name}_y.csv'
        datag.save_dataset(raw, os.path.join(out_dir, z_name),
                           os.path.join(out_dir, y_name))
        pairs.append((z_name, y_name))

    cfg_path = os.path.join(out_dir, 'fit.cfg')
    with open(cfg_path, 'w', encoding='utf-8') as f:
        f.write(f'# Simulated replicate {replicate}, eta = {eta!r}\n')
        f.write(f'target_z = {pairs[0][0]}\n')
        f.write(f'target_y = {pairs[0][1]}\n')
        f.write('sources = ' + ', '.join(f'{z}:{y}' for z, y in pairs[1:])
                + '\n')
        f.write('method = all\n')
        f.write('center = false\n')
        f.write(f'seed = {sim.seed}\n')
        f.write('output = coefficients.csv\n')
    return cfg_path


def main(argv):
    try:
        opts, args = getopt.getopt(argv, 'hc:o:r:e:',
                                   ['help', 'config=', 'out=', 'replicate=',
                                    'eta='])
    except getopt.GetoptError:
        print(_HELP)
        return 2
    config_path, out_dir, replicate, eta = None, None, 0, None
    for opt, arg in opts:
        if opt in ('-h', '--help'):
            print(_HELP)
            return 0
        elif opt in ('-c', '--config'):
            config_path = arg
        elif opt in ('-o', '--out'):
            out_dir = arg
        elif opt in ('-r', '--replicate'):
            replicate = arg
        elif opt in ('-e', '--eta'):
            eta = arg
    if config_path is None or out_dir is None:
        print(_HELP)
        return 2

    print(f'\n\n{"~"*80}\n')
    print(f'{"<"*5}{"-"*5}{" "*22}{bcolours.OKGREEN}'
          + f'Script starting{bcolours.ENDC}{" "*23}{"-"*5}{">"*5}\n\n')
    try:
        replicate = int(replicate)
        eta = None if eta is None else float(eta)
        sim = load_bench_config(config_path).sim
        cfg_path = write_replicate(sim, out_dir, replicate, eta)
    except (ValueError, OSError) as err:
        print(f'{bcolours.FAIL}{err}{bcolours.ENDC}', file=sys.stderr)
        return 2
    print(f'Wrote {sim.k_sources + 1} datasets and {cfg_path}')
    print(f'{"<"*5}{"-"*5}{" "*22}{bcolours.OKGREEN}'
          + f'Script complete{bcolours.ENDC}{" "*23}{"-"*5}{">"*5}\n')
    return 0


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
