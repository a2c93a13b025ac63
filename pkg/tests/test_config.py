"""Tests for config file parsing and validation."""

import os.path

import numpy as np
import pytest

from lib import datagather as datag
from lib.config import load_bench_config, load_run_config, read_config
from lib.errors import ConfigError
from lib.simbench import SimConfig
from lib.smoothing import METHODS, RawDataset, even_grid


def _write(path, text):
    path.write_text(text, encoding='utf-8')
    return str(path)


@pytest.fixture
def data_dir(tmp_path):
    '''Target and one source as csv pairs under tmp_path/data'''
    rng = np.random.default_rng(0)
    for name in ('target', 'source1'):
        raw = RawDataset(rng.standard_normal((5, 6)), rng.standard_normal(6),
                         even_grid(5))
        datag.save_dataset(raw, str(tmp_path / 'data' / f'{name}_z.csv'),
                           str(tmp_path / 'data' / f'{name}_y.csv'))
    return tmp_path


_RUN = '''# run file
target_z = data/target_z.csv
target_y = data/target_y.csv   # trailing comment
sources = data/source1_z.csv:data/source1_y.csv
output = out/coef.csv
'''


class TestReadConfig:
    """read_config parses key = value lines."""

    def test_entries_and_lines(self, tmp_path):
        path = _write(tmp_path / 'a.cfg', '# c\n\nseed = 7\nmethod=all # x\n')
        assert read_config(path) == {'seed': ('7', 3), 'method': ('all', 4)}

    def test_missing_equals(self, tmp_path):
        path = _write(tmp_path / 'a.cfg', 'seed = 7\nseed 8\n')
        with pytest.raises(ConfigError) as err:
            read_config(path)
        assert err.value.line == 2

    def test_repeated_key(self, tmp_path):
        path = _write(tmp_path / 'a.cfg', 'seed = 7\n\nseed = 8\n')
        with pytest.raises(ConfigError) as err:
            read_config(path)
        assert (err.value.key, err.value.line) == ('seed', 3)
        assert 'line 1' in str(err.value)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config(str(tmp_path / 'missing.cfg'))


class TestLoadRunConfig:
    """Typed run settings with line-numbered errors."""

    def test_defaults(self, data_dir):
        cfg = load_run_config(_write(data_dir / 'fit.cfg', _RUN))
        assert cfg.target_z == os.path.join(str(data_dir), 'data',
                                            'target_z.csv')
        assert cfg.output == os.path.join(str(data_dir), 'out', 'coef.csv')
        assert len(cfg.sources) == 1
        assert cfg.rho is None and cfg.lam is None and cfg.zeta is None
        assert cfg.methods == METHODS
        assert cfg.alpha == 0.05
        assert cfg.center is True
        assert cfg.transferable is None

    def test_values(self, data_dir):
        text = _RUN + ('rho = 1e-4\nlambda = 0.5\nzeta = path\n'
                       'method = local, cvs\nvariance_mode = hc\n'
                       'center = no\ntransferable = 1\nseed = 12\n')
        cfg = load_run_config(_write(data_dir / 'fit.cfg', text))
        assert (cfg.rho, cfg.lam, cfg.zeta) == (1e-4, 0.5, None)
        assert cfg.methods == ('local', 'cvs')
        assert cfg.variance_mode == 'hc'
        assert cfg.center is False
        assert cfg.transferable == (1,)
        assert cfg.seed == 12
        settings = cfg.settings()
        assert settings.lam == 0.5 and settings.transferable == (1,)

    def test_unknown_key(self, data_dir):
        path = _write(data_dir / 'fit.cfg', _RUN + 'lamda = 3\n')
        with pytest.raises(ConfigError) as err:
            load_run_config(path)
        assert (err.value.key, err.value.line) == ('lamda', 6)

    @pytest.mark.parametrize('line, key', [
        ('lambda = 0', 'lambda'), ('alpha = 1.5', 'alpha'),
        ('zeta = -1', 'zeta'), ('rho = fast', 'rho'), ('seed = 1.5', 'seed'),
        ('method = ridge', 'method'), ('center = maybe', 'center'),
        ('variance_mode = robust', 'variance_mode'),
        ('transferable = 2', 'transferable'), ('lambda = nan', 'lambda'),
        ('zeta = inf', 'zeta'), ('rho = -inf', 'rho'),
        ('alpha = nan', 'alpha'), ('n_jobs = 0', 'n_jobs')])
    def test_bad_values(self, data_dir, line, key):
        path = _write(data_dir / 'fit.cfg', _RUN + line + '\n')
        with pytest.raises(ConfigError) as err:
            load_run_config(path)
        assert err.value.key == key
        assert f'key `{key}`' in str(err.value)

    def test_missing_file(self, data_dir):
        text = _RUN.replace('data/target_y.csv', 'data/nothing.csv')
        with pytest.raises(ConfigError) as err:
            load_run_config(_write(data_dir / 'fit.cfg', text))
        assert err.value.key == 'target_y'
        assert 'file not found' in str(err.value)

    def test_bad_source_pair(self, data_dir):
        text = _RUN.replace('data/source1_z.csv:data/source1_y.csv',
                            'data/source1_z.csv')
        with pytest.raises(ConfigError) as err:
            load_run_config(_write(data_dir / 'fit.cfg', text))
        assert err.value.key == 'sources'

    def test_missing_target(self, data_dir):
        text = _RUN.replace('target_z = data/target_z.csv\n', '')
        with pytest.raises(ConfigError) as err:
            load_run_config(_write(data_dir / 'fit.cfg', text))
        assert err.value.key == 'target_z'

    def test_manifest(self, data_dir):
        cfg = load_run_config(_write(data_dir / 'fit.cfg', _RUN))
        section = cfg.manifest()
        assert section['rho'] == 'gcv'
        assert section['lambda'] == 'cv'
        assert section['transferable'] == 'all'


class TestLoadBenchConfig:
    """Bench settings default to SimConfig."""

    def test_defaults(self, tmp_path):
        bench = load_bench_config(_write(tmp_path / 'b.cfg',
                                         'output = res.csv\n'))
        assert bench.sim == SimConfig()
        assert bench.output == os.path.join(str(tmp_path), 'res.csv')

    def test_values(self, tmp_path):
        text = ('output = r.csv\nn = 40\nj = 11\neta = 100, 1\n'
                'methods = otl, cvs\nlambda = 1e-3\nreplications = 3\n')
        sim = load_bench_config(_write(tmp_path / 'b.cfg', text)).sim
        assert (sim.n, sim.j, sim.replications) == (40, 11, 3)
        assert sim.eta == (100.0, 1.0)
        assert sim.methods == ('otl', 'cvs')
        assert sim.lam == 1e-3

    def test_zero_eta(self, tmp_path):
        path = _write(tmp_path / 'b.cfg', 'output = r.csv\neta = 10, 0\n')
        with pytest.raises(ConfigError) as err:
            load_bench_config(path)
        assert (err.value.key, err.value.line) == ('eta', 2)

    @pytest.mark.parametrize('line, key', [
        ('eta = nan', 'eta'), ('eta = 10, inf', 'eta'),
        ('lambda = nan', 'lambda'), ('rho = nan', 'rho'),
        ('zeta = inf', 'zeta'), ('target_scale = inf', 'target_scale'),
        ('noise_var_meas = nan', 'noise_var_meas'), ('n_jobs = 0', 'n_jobs')])
    def test_non_finite_and_zero_jobs(self, tmp_path, line, key):
        path = _write(tmp_path / 'b.cfg', 'output = r.csv\n' + line + '\n')
        with pytest.raises(ConfigError) as err:
            load_bench_config(path)
        assert (err.value.key, err.value.line) == (key, 2)

    def test_local_is_implicit(self, tmp_path):
        path = _write(tmp_path / 'b.cfg', 'output = r.csv\nmethods = local\n')
        with pytest.raises(ConfigError):
            load_bench_config(path)

    def test_inconsistent_sizes(self, tmp_path):
        path = _write(tmp_path / 'b.cfg',
                      'output = r.csv\nj = 50\nlatent_grid = 20\n')
        with pytest.raises(ConfigError):
            load_bench_config(path)

    def test_manifest(self, tmp_path):
        bench = load_bench_config(_write(tmp_path / 'b.cfg',
                                         'output = r.csv\n'))
        section = bench.manifest()
        assert section['latent_size'] == 981
        assert section['lam'] == 'cv'
        assert section['eta'] == [100.0, 50.0, 10.0, 5.0, 1.0]
