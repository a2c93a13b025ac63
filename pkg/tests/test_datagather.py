"""Tests for dataset and result file IO."""

import numpy as np
import pandas as pd
import pytest

from lib import datagather as datag
from lib.basis import fourier_basis
from lib.errors import DataFormatError
from lib.simbench import ResultRow
from lib.smoothing import CoefEstimate, RawDataset, even_grid


def _write(path, text):
    path.write_text(text, encoding='utf-8')
    return str(path)


@pytest.fixture
def y_file(tmp_path):
    return _write(tmp_path / 'y.csv', 'y\n1.5\n-2\n')


class TestLoadDataset:
    """load_dataset reads and validates a Z/Y pair."""

    def test_small_file(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,t=0.5,t=1\n1,2,3\n4,5,6\n')
        raw = datag.load_dataset(z, y_file, id='s1')
        assert (raw.J, raw.n) == (3, 2)
        np.testing.assert_array_equal(raw.z, [[1, 4], [2, 5], [3, 6]])
        np.testing.assert_array_equal(raw.y, [1.5, -2.0])
        np.testing.assert_array_equal(raw.grid, [0.0, 0.5, 1.0])
        assert raw.id == 's1'

    def test_uneven_grid(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,t=0.4,t=1\n1,2,3\n4,5,6\n')
        with pytest.raises(DataFormatError) as err:
            datag.load_dataset(z, y_file)
        assert 'deviation 0.1' in str(err.value)

    def test_grid_outside_unit_interval(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,t=0.75,t=1.5\n1,2,3\n4,5,6\n')
        with pytest.raises(DataFormatError) as err:
            datag.load_dataset(z, y_file)
        assert 'outside [0, 1]' in str(err.value)

    def test_bad_header(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,s=0.5,t=1\n1,2,3\n4,5,6\n')
        with pytest.raises(DataFormatError):
            datag.load_dataset(z, y_file)

    def test_non_numeric_cell(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,t=0.5,t=1\n1,2,3\n4,x,6\n')
        with pytest.raises(DataFormatError) as err:
            datag.load_dataset(z, y_file)
        assert 'row 2, column 2' in str(err.value)
        assert '`x`' in str(err.value)

    def test_empty_cell(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,t=0.5,t=1\n1,,3\n4,5,6\n')
        with pytest.raises(DataFormatError) as err:
            datag.load_dataset(z, y_file)
        assert 'row 1, column 2' in str(err.value)

    def test_row_mismatch(self, tmp_path, y_file):
        z = _write(tmp_path / 'z.csv', 't=0,t=0.5,t=1\n1,2,3\n4,5,6\n7,8,9\n')
        with pytest.raises(DataFormatError) as err:
            datag.load_dataset(z, y_file)
        assert 'has 3 rows' in str(err.value)

    def test_y_header(self, tmp_path):
        z = _write(tmp_path / 'z.csv', 't=0,t=1\n1,2\n')
        y = _write(tmp_path / 'y.csv', 'response\n1\n')
        with pytest.raises(DataFormatError):
            datag.load_dataset(z, y)

    def test_missing_file(self, tmp_path, y_file):
        with pytest.raises(DataFormatError) as err:
            datag.load_dataset(str(tmp_path / 'none.csv'), y_file)
        assert 'file not found' in str(err.value)


class TestSaveDataset:
    """save_dataset writes what load_dataset reads back."""

    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        raw = RawDataset(rng.standard_normal((7, 4)) * 1e3,
                         rng.standard_normal(4) / 7, even_grid(7))
        z, y = str(tmp_path / 'd' / 'z.csv'), str(tmp_path / 'd' / 'y.csv')
        datag.save_dataset(raw, z, y)
        back = datag.load_dataset(z, y)
        np.testing.assert_array_equal(back.z, raw.z)
        np.testing.assert_array_equal(back.y, raw.y)
        np.testing.assert_array_equal(back.grid, raw.grid)

    def test_grid_header_is_plain_decimal(self, tmp_path):
        raw = RawDataset(np.ones((5, 2)), np.zeros(2), even_grid(5))
        z, y = str(tmp_path / 'z.csv'), str(tmp_path / 'y.csv')
        datag.save_dataset(raw, z, y)
        with open(z, encoding='utf-8') as f:
            assert f.readline().strip() == 't=0.0,t=0.25,t=0.5,t=0.75,t=1.0'
        assert datag.load_dataset(z, y).J == 5


class TestWriters:
    """Coefficient and result writers."""

    def test_coefficients(self, tmp_path):
        basis = fourier_basis(3)
        estimates = [CoefEstimate([1.0, 2.0, 3.0], 'local', basis),
                     CoefEstimate([0.1, 0.2, 0.3], 'cvs', basis)]
        path = str(tmp_path / 'coef.csv')
        datag.write_coefficients(estimates, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ['method', 'basis_index', 'coefficient']
        assert list(frame['method']) == ['local'] * 3 + ['cvs'] * 3
        assert list(frame['basis_index']) == [1, 2, 3, 1, 2, 3]
        assert frame['coefficient'].iloc[4] == 0.2

    def test_results(self, tmp_path):
        rows = [ResultRow(0, 'local', 10.0, 1.0, 1.0, target='t'),
                ResultRow(0, 'cvs', 10.0, 0.5, 0.25, target='t')]
        path = str(tmp_path / 'res.csv')
        datag.write_results(rows, path, with_target=True)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ['target', 'replicate', 'method', 'eta',
                                       'ree', 'rpe', 'wall_ms']
        assert frame['rpe'].iloc[1] == 0.25

    def test_summary_path(self):
        assert datag.summary_path('out/res.csv') == 'out/res_summary.csv'
        assert datag.summary_path('out/res') == 'out/res_summary.csv'
