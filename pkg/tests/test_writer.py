"""Tests for the run manifest writer."""

import numpy as np
import pytest

from lib.writer import _ManifestWriter, write_manifest


def test_sections_and_values(tmp_path):
    path = str(tmp_path / 'run.manifest')
    write_manifest(path, {'config': {'lambda': 0.1 + 0.2, 'eta': [100.0, 1],
                                     'zeta': None, 'seed': 7},
                          'cvs': {'kept': np.array([1, 3])}},
                   header='''
                       Run manifest.
                   ''')
    lines = open(path, encoding='utf-8').read().splitlines()
    assert lines[0] == '# Run manifest.'
    assert '[config]' in lines
    assert '  lambda = 0.30000000000000004' in lines
    assert '  eta = 100.0, 1' in lines
    assert '  zeta = none' in lines
    assert '  kept = 1, 3' in lines


def test_failed_write_leaves_empty_file(tmp_path):
    path = tmp_path / 'run.manifest'
    with pytest.raises(RuntimeError):
        with open(str(path), 'w', encoding='utf-8') as f:
            with _ManifestWriter(f) as w:
                w.section('config').item('seed', 1)
                raise RuntimeError('interrupted')
    assert path.read_text() == ''
