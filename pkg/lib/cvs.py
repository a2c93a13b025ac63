# -*- coding: utf-8 -*-
"""Control Variates

Transfer by control variates. With local estimates c^(0), ..., c^(K) the
control variates are delta = 1_K (x) c^(0) - [c^(1); ...; c^(K)], and the
target estimate is corrected by

    c = c^(0) - U* (delta - E(delta | Z)),
    U* = {sum_k V_k^-1}^-1 [V_1^-1, ..., V_K^-1],

where V_k is the plug-in var(c^(k) | Z^(k)). U* minimizes the conditional
variance of the corrected estimate. Only per-dataset summaries (c^(k), E, V)
are needed.

The precision of delta and the blocks of the inverse joint covariance of
(c^(0), delta) follow from the Woodbury identity and the 2 x 2 partitioned
inverse; none of them assembles or inverts an MK x MK matrix.

This file contains the following:

    * CvsSystem - control variates, their plug-in mean and the combiner U*
    * assemble_cvs - build a CvsSystem from local fits
    * cvs_estimate - the control-variates estimate
    * delta_precision - var^-1(delta | Z) = B1 - B2
    * partitioned_inverse_blocks - (B11, B12, B22)

"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from lib.errors import (InvalidArgumentError, SingularSystemError,
                        SingularVarianceError)
from lib.smoothing import CoefEstimate
from lib.utils import spd_inverse, symmetrize

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CvsSystem:
    '''
    Control variates and their optimal combiner.

    Attributes:
        delta_hat (np.ndarray): MK-vector of c^(0) - c^(k), k = 1..K
        e_delta (np.ndarray): MK-vector plug-in E(delta | Z)
        u_star (np.ndarray): M x MK combiner
        v_blocks (list of np.ndarray): K + 1 variance blocks (target first),
            jitter included
        precision_sum_inv (np.ndarray): {sum_k V_k^-1}^-1
        precisions (list of np.ndarray): V_k^-1, k = 0..K
        c0 (np.ndarray): Target local coefficients
    '''
    delta_hat: np.ndarray
    e_delta: np.ndarray
    u_star: np.ndarray
    v_blocks: list
    precision_sum_inv: np.ndarray
    precisions: list
    c0: np.ndarray

    @property
    def M(self):
        return self.c0.size

    @property
    def K(self):
        return len(self.v_blocks) - 1


def _check_fits(fits):
    if len(fits) < 2:
        raise InvalidArgumentError('cvs: need the target and at least one '
                                   'source fit')
    basis = fits[0].basis
    for fit in fits[1:]:
        if not basis.compatible(fit.basis):
            raise InvalidArgumentError('cvs: fits do not share one basis')


def _precisions(fits):
    '''V_k^-1 for every fit and {sum_k V_k^-1}^-1'''
    _check_fits(fits)
    precisions = []
    for k, fit in enumerate(fits):
        try:
            precisions.append(spd_inverse(fit.v_stable, what='cvs'))
        except SingularSystemError as err:
            raise SingularVarianceError(
                f'cvs: variance block of dataset {k} is not invertible '
                f'(jitter {fit.jitter:.3g})', k=k) from err
    total = np.sum(precisions, axis=0)
    sum_inv = spd_inverse(total, what='cvs')
    return precisions, sum_inv


def assemble_cvs(fits):
    '''
    Build the control-variates system.

    Parameters:
        fits (list of LocalFit): Target fit first, then the K sources

    Returns:
        CvsSystem

    Raises:
        SingularVarianceError: naming the dataset whose block is singular
    '''
    precisions, sum_inv = _precisions(fits)
    c0 = fits[0].c_hat
    delta_hat = np.concatenate([c0 - fit.c_hat for fit in fits[1:]])
    e_delta = np.concatenate([fits[0].e_hat - fit.e_hat for fit in fits[1:]])
    u_star = sum_inv @ np.hstack(precisions[1:])
    logger.debug('cvs: %d sources, M=%d, jitter %s', len(fits) - 1,
                 c0.size, [f'{fit.jitter:.3g}' for fit in fits])
    return CvsSystem(delta_hat=delta_hat, e_delta=e_delta, u_star=u_star,
                     v_blocks=[fit.v_stable for fit in fits],
                     precision_sum_inv=sum_inv, precisions=precisions, c0=c0)


def corrected(sys, delta):
    '''c^(0) - U* (delta_hat - delta) for a given delta'''
    delta = np.asarray(delta, dtype=float)
    if delta.shape != sys.delta_hat.shape:
        raise InvalidArgumentError(
            f'cvs: delta has shape {delta.shape}, expected '
            f'{sys.delta_hat.shape}')
    return sys.c0 - sys.u_star @ (sys.delta_hat - delta)


def cvs_estimate(sys, target_fit):
    '''
    Control-variates estimate c^(0) - U* (delta_hat - E(delta | Z)).

    Parameters:
        sys (CvsSystem): System built from fits including ``target_fit``
        target_fit (LocalFit): The target's local fit

    Returns:
        CoefEstimate: tagged ``cvs``
    '''
    if target_fit.c_hat.shape != sys.c0.shape:
        raise InvalidArgumentError('cvs: target fit does not match the system')
    c = corrected(sys, sys.e_delta)
    return CoefEstimate(c, 'cvs', target_fit.basis)


def delta_precision(fits):
    '''
    Precision of the control variates, Q = B1 - B2 with

        B1 = blockdiag(V_1^-1, ..., V_K^-1)
        B2 = H' {sum_k V_k^-1}^-1 H,   H = [V_1^-1, ..., V_K^-1]

    Parameters:
        fits (list of LocalFit): Target fit first, then the sources

    Returns:
        np.ndarray: MK x MK symmetric matrix
    '''
    precisions, sum_inv = _precisions(fits)
    h = np.hstack(precisions[1:])
    q = linalg.block_diag(*precisions[1:]) - h.T @ sum_inv @ h
    return symmetrize(q)


def partitioned_inverse_blocks(fits):
    '''
    Blocks of the inverse joint covariance of (c^(0), delta):

        B11 = sum_{k=0}^K V_k^-1
        B12 = -[V_1^-1, ..., V_K^-1]
        B22 = blockdiag(V_1^-1, ..., V_K^-1)

    Returns:
        (np.ndarray, np.ndarray, np.ndarray): B11, B12, B22
    '''
    precisions, _ = _precisions(fits)
    b11 = symmetrize(np.sum(precisions, axis=0))
    b12 = -np.hstack(precisions[1:])
    b22 = linalg.block_diag(*precisions[1:])
    return b11, b12, b22
