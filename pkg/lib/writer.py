"""Run manifest writer

Plain-text ``[section]`` / ``key = value`` blocks recording every resolved
tuning value of a run, so a run can be repeated from the manifest alone.
"""

import inspect

import numpy as np

# Indent level for writer
_INDENT_LEVEL = 2
_INDENT = ' ' * _INDENT_LEVEL


def _format_value(value):
    '''Render a manifest value; floats keep every significant digit'''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ', '.join(_format_value(v) for v in value)
    if value is None:
        return 'none'
    return str(value)


class _ManifestWriter(object):
    '''Writer used to create manifest files with consistent formatting'''

    def __init__(self, handle):
        '''
        Args:
            handle (handle): Open text file to write to
        '''
        self._handle = handle
        self._indent_level = 0

    def __enter__(self):
        return self

    def __exit__(self, exception_type, exception_value, traceback):
        # Drop a half-written manifest
        if exception_type:
            self._handle.seek(0)
            self._handle.truncate(0)

    def comment(self, content):
        '''
        Write one or more ``#`` comment lines. Content is cleaned with
        ``inspect.cleandoc()`` first.
        '''
        for line in inspect.cleandoc(content).splitlines():
            self._handle.write(f'{_INDENT * self._indent_level}# {line}\n')
        return self

    def section(self, name):
        '''Open a ``[name]`` section; following items are indented'''
        self._indent_level = 0
        self._handle.write(f'[{name}]\n')
        self._indent_level = 1
        return self

    def item(self, key, value):
        '''Write a single ``key = value`` line at the current indent'''
        self._handle.write(
            f'{_INDENT * self._indent_level}{key} = {_format_value(value)}\n')
        return self

    def items(self, mapping):
        '''Write every entry of ``mapping`` in insertion order'''
        for key, value in mapping.items():
            self.item(key, value)
        return self

    def blank(self):
        self._handle.write('\n')
        return self


def write_manifest(path, sections, header=None):
    '''
    Write a manifest file.

    Parameters:
        path (str): Output path
        sections (dict): Mapping of section name to a dict of key/values
        header (str): Optional comment block written first
    '''
    with open(path, 'w', encoding='utf-8') as f:
        with _ManifestWriter(f) as w:
            if header:
                w.comment(header)
                w.blank()
            for name, mapping in sections.items():
                w.section(name)
                w.items(mapping)
                w.blank()
