# -*- coding: utf-8 -*-
"""Data Gathering

This module contains functions to read curve datasets from csv files and to
write datasets, coefficient estimates and benchmark results back out.

A dataset is a pair of files:

    * Z file - one row per subject, one column per grid point, with header
        ``t=<value>`` giving the (evenly spaced, 0 to 1) grid
    * Y file - one row per subject, a single column headed ``y``

Floats are written with 17 significant digits so a save/load round trip is
exact.

This file contains the following functions:

    * load_dataset - reads and validates a (Z, Y) file pair
    * save_dataset - writes a RawDataset as a (Z, Y) file pair
    * write_coefficients - writes coefficient estimates
    * write_results - writes benchmark or cycling result rows
    * write_summary - writes per-method medians
    * write_data - writes given data to a csv file

"""

import logging
import os.path

import numpy as np
import pandas as pd

from lib.errors import DataFormatError, InvalidArgumentError
from lib.simbench import rows_frame
from lib.smoothing import RawDataset, grid_deviation

logger = logging.getLogger(__name__)

# Module global variables
_GRID_PREFIX = 't='
_Y_HEADER = 'y'
_FLOAT_FORMAT = '%.17g'
_GRID_TOL = 1e-9


def _read_cells(path):
    '''Header and cell strings of a csv file'''
    if not os.path.isfile(path):
        raise DataFormatError(f'datagather: file not found: {path}')
    try:
        frame = pd.read_csv(path, header=0, dtype=str, keep_default_na=False,
                            encoding='utf-8')
    except (pd.errors.ParserError, pd.errors.EmptyDataError,
            UnicodeDecodeError) as err:
        raise DataFormatError(f'datagather: cannot parse {path}: {err}') \
            from err
    return list(frame.columns), frame.to_numpy(dtype=str)


def _to_float(cells, header, path):
    '''
    Convert cell strings to floats, naming the first bad cell (1-based data
    row and column).
    '''
    try:
        values = cells.astype(float)
    except ValueError:
        values = None
    if values is not None and np.all(np.isfinite(values)):
        return values
    for i, row in enumerate(cells):
        for j, cell in enumerate(row):
            try:
                ok = np.isfinite(float(cell))
            except ValueError:
                ok = False
            if not ok:
                raise DataFormatError(
                    f'datagather: {path}: non-numeric value `{cell}` at row '
                    f'{i + 1}, column {j + 1} ({header[j]})')
    raise DataFormatError(f'datagather: {path}: cannot convert values')


def _parse_grid(header, path):
    grid = []
    for j, name in enumerate(header):
        name = name.strip()
        if not name.startswith(_GRID_PREFIX):
            raise DataFormatError(
                f'datagather: {path}: column {j + 1} header `{name}` is not '
                f'of the form {_GRID_PREFIX}<value>')
        try:
            grid.append(float(name[len(_GRID_PREFIX):]))
        except ValueError:
            raise DataFormatError(
                f'datagather: {path}: column {j + 1} header `{name}` has a '
                'non-numeric grid value')
    grid = np.array(grid)
    if grid.size < 2:
        raise DataFormatError(f'datagather: {path}: need at least 2 grid '
                              'points')
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise DataFormatError(f'datagather: {path}: grid outside [0, 1] '
                              f'({grid.min():g} to {grid.max():g})')
    if np.any(np.diff(grid) <= 0.0):
        raise DataFormatError(f'datagather: {path}: grid is not strictly '
                              'increasing')
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise DataFormatError(f'datagather: {path}: grid must run from 0 to '
                              f'1, got {grid[0]:g} to {grid[-1]:g}')
    deviation = grid_deviation(grid)
    if deviation > _GRID_TOL:
        raise DataFormatError(f'datagather: {path}: uneven grid (max spacing '
                              f'deviation {deviation:g})')
    return grid


def load_dataset(path_z, path_y, id=0):
    '''
    Reads a dataset from its Z and Y files.

    Parameters:
        path_z (str): Curves, n rows x J columns with ``t=<value>`` headers
        path_y (str): Responses, n rows with header ``y``
        id (str or int): Dataset label. Defaults to 0 (the target)

    Returns:
        RawDataset

    Raises:
        DataFormatError: missing file, bad header, non-numeric cell, uneven
            or out-of-range grid, or row counts that do not match
    '''
    header_z, cells_z = _read_cells(path_z)
    grid = _parse_grid(header_z, path_z)
    z = _to_float(cells_z, header_z, path_z)

    header_y, cells_y = _read_cells(path_y)
    if [h.strip() for h in header_y] != [_Y_HEADER]:
        raise DataFormatError(f'datagather: {path_y}: expected a single '
                              f'column headed `{_Y_HEADER}`, got {header_y}')
    y = _to_float(cells_y, header_y, path_y).reshape(-1)

    if z.shape[0] != y.size:
        raise DataFormatError(f'datagather: {path_z} has {z.shape[0]} rows '
                              f'but {path_y} has {y.size}')
    if y.size == 0:
        raise DataFormatError(f'datagather: {path_z}: no subjects')
    try:
        raw = RawDataset(z.T, y, grid, id=id)
    except InvalidArgumentError as err:
        raise DataFormatError(f'datagather: {path_z}: {err}') from err
    logger.info('Loaded dataset %s: n=%d, J=%d', id, raw.n, raw.J)
    return raw


def save_dataset(raw, path_z, path_y):
    '''
    Writes a RawDataset as a Z/Y file pair readable by ``load_dataset``.

    Parameters:
        raw (RawDataset): Data
        path_z (str): Curves file; dirs are created if missing
        path_y (str): Responses file
    '''
    header = [f'{_GRID_PREFIX}{float(t)!r}' for t in raw.grid]
    write_data(pd.DataFrame(raw.z.T, columns=header), path_z)
    write_data(pd.DataFrame({_Y_HEADER: raw.y}), path_y)


def write_coefficients(estimates, path):
    '''
    Writes coefficient estimates with columns method, basis_index (1-based)
    and coefficient.

    Parameters:
        estimates (list of CoefEstimate): In output order
        path (str): Output csv
    '''
    frames = [pd.DataFrame({'method': est.method,
                            'basis_index': np.arange(1, est.c.size + 1),
                            'coefficient': est.c}) for est in estimates]
    data = pd.concat(frames, ignore_index=True) if frames else \
        pd.DataFrame(columns=['method', 'basis_index', 'coefficient'])
    write_data(data, path)


def write_results(rows, path, with_target=False):
    '''
    Writes result rows (``replicate,method,eta,ree,rpe,wall_ms``, with a
    leading ``target`` column for cycling).
    '''
    write_data(rows_frame(rows, with_target=with_target), path)


def write_summary(summary, path):
    '''Writes the frame returned by ``simbench.summarize``'''
    write_data(summary, path)


def summary_path(path):
    '''``out/results.csv`` -> ``out/results_summary.csv``'''
    stem, ext = os.path.splitext(path)
    return f'{stem}_summary{ext or ".csv"}'


def write_data(data, path):
    '''
    Writes the given data to the given path pointing to a csv file.

    Parameters:
        data (data.frame): A data frame of data
        path (str): A full path to a csv file e.g. ../data/data.csv. Will
            create dir and file if they do not exist
    '''

    # Create dir if it does not exist
    dir = os.path.dirname(path)
    if dir and not os.path.exists(dir):
        os.makedirs(dir)
        logger.info('Created dir %s', dir)

    data.to_csv(path, index=False, float_format=_FLOAT_FORMAT)
    logger.info('Wrote %d rows to %s', len(data), path)
