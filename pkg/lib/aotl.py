# -*- coding: utf-8 -*-
"""Aggregated Offset Transfer Learning

Offset transfer with an unknown transferable set. The target is split in
halves; the first half ranks the sources by how close their local estimates
are to the target's, giving nested candidate sets K_1 c ... c K_K. One offset
fit per candidate set is made on the first half, and the second half (split
again) aggregates the candidates by hyper-sparse aggregation: pick the best
candidate, keep the candidates whose risk is within a margin of it, blend
each with the best one using the closed-form weight, and return the blend of
smallest risk.

This file contains the following:

    * AggregationConstants - margin constants b1, b2 (and b3, alpha)
    * SplitPlan / make_split - the random target splits
    * risk_r1 - mean squared prediction error on an index set
    * dist_r2 - mean squared prediction distance of two estimates
    * candidate_sets - nested candidate transferable sets
    * hyper_sparse_aggregate - aggregation of candidate estimates
    * run_aotl - the whole procedure

"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from lib.errors import InvalidArgumentError
from lib.estimators import fit_local, fit_offset, fit_pooled
from lib.smoothing import CoefEstimate, predict

logger = logging.getLogger(__name__)

# Module global variables
_DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class AggregationConstants:
    '''
    Constants of the aggregation margin b1 (b2^2 v b2 sqrt(R2)).

    Attributes:
        b3 (float): Surrogate bound on |Y| and on every candidate prediction
        b1 (float): 4 (1 + 9 b3)
        b2 (float): b3 sqrt((ln(K + 1) + alpha) / n0)
        alpha (float): Confidence level in (0, 1)
    '''
    b3: float
    b1: float
    b2: float
    alpha: float

    @classmethod
    def from_bound(cls, b3, n_sources, n0, alpha=_DEFAULT_ALPHA):
        '''
        Build the constants from a bound ``b3``.

        Parameters:
            b3 (float): Bound surrogate, >= 0
            n_sources (int): Number of sources K
            n0 (int): Number of target subjects
            alpha (float): Confidence level in (0, 1)
        '''
        if not 0.0 < alpha < 1.0:
            raise InvalidArgumentError(f'aotl: alpha must be in (0, 1), '
                                       f'got {alpha}')
        if b3 < 0 or n0 < 1:
            raise InvalidArgumentError('aotl: need b3 >= 0 and n0 >= 1')
        b1 = 4.0 * (1.0 + 9.0 * b3)
        b2 = b3 * math.sqrt((math.log(n_sources + 1) + alpha) / n0)
        return cls(b3=float(b3), b1=b1, b2=b2, alpha=float(alpha))


@dataclass(frozen=True)
class SplitPlan:
    '''
    Index sets of the target splits.

    Attributes:
        idx_01 (np.ndarray): Half used to fit the candidates
        idx_021 (np.ndarray): Quarter used to pick and screen candidates
        idx_022 (np.ndarray): Quarter used to blend
        seed (int): Seed recorded for the manifest, if known
    '''
    idx_01: np.ndarray
    idx_021: np.ndarray
    idx_022: np.ndarray
    seed: int = None


def make_split(n0, rng, seed=None):
    '''
    Randomly split ``n0`` target subjects into D01, D021 and D022.

    D01 gets ceil(n0 / 2) subjects; the rest is split as evenly as possible
    with the extra subject going to D021.

    Raises:
        InvalidArgumentError: if n0 < 4 (some split would be empty)
    '''
    if n0 < 4:
        raise InvalidArgumentError(f'aotl: need at least 4 target subjects '
                                   f'to split, got {n0}')
    perm = rng.permutation(n0)
    n01 = (n0 + 1) // 2
    n021 = (n0 - n01 + 1) // 2
    return SplitPlan(idx_01=np.sort(perm[:n01]),
                     idx_021=np.sort(perm[n01:n01 + n021]),
                     idx_022=np.sort(perm[n01 + n021:]),
                     seed=seed)


def _index_set(target, idx):
    idx = np.arange(target.n) if idx is None else np.asarray(idx, dtype=int)
    if idx.size == 0:
        raise InvalidArgumentError('aotl: index set is empty')
    return idx


def risk_r1(f, target, idx=None):
    '''
    Prediction risk |A|^-1 sum_{i in A} (Y_i - <X_i, f>)^2.

    Parameters:
        f (CoefEstimate): Estimate
        target (SmoothedDataset): Target curves with responses
        idx (array-like): Index set A; all subjects when None
    '''
    idx = _index_set(target, idx)
    resid = target.y[idx] - predict(f, target)[idx]
    return float(np.mean(resid ** 2))


def dist_r2(f1, f2, target, idx=None):
    '''
    Prediction distance |A|^-1 sum_{i in A} <X_i, f1 - f2>^2.
    '''
    idx = _index_set(target, idx)
    diff = predict(f1, target)[idx] - predict(f2, target)[idx]
    return float(np.mean(diff ** 2))


def candidate_sets(beta_01, source_fits, target, idx=None):
    '''
    Nested candidate transferable sets.

    K_k holds the (1-based) sources with the k smallest distances
    R2(beta_01, beta^(m)) on the index set; ties go to the smaller index.

    Parameters:
        beta_01 (CoefEstimate): Local estimate on D01
        source_fits (list of CoefEstimate): Local estimates of the sources
        target (SmoothedDataset): Target curves
        idx (array-like): Index set of D01 within ``target``

    Returns:
        (list of list of int, np.ndarray): the K sets and the distances
    '''
    if len(source_fits) < 1:
        raise InvalidArgumentError('aotl: need at least one source')
    dists = np.array([dist_r2(beta_01, f, target, idx) for f in source_fits])
    order = np.argsort(dists, kind='stable') + 1
    return [sorted(order[:k].tolist()) for k in range(1, order.size + 1)], \
        dists


def _blend_weight(r1_theta, r1_star, r2):
    if r2 <= 0.0:
        return 1.0
    return min(1.0, max(0.0, 0.5 * (r1_theta - r1_star) / r2 + 0.5))


def hyper_sparse_aggregate(candidates, target, plan, constants):
    '''
    Hyper-sparse aggregation of candidate estimates.

    The best candidate beta* on D021 is kept with every candidate theta whose
    D021 risk is within b1 max(b2^2, b2 sqrt(R2(beta*, theta))) of it. Each
    kept theta is blended as a beta* + (1 - a) theta with the risk-minimizing
    weight on D022, clamped to [0, 1]; the blend with the smallest D022 risk
    is returned.

    Parameters:
        candidates (list of CoefEstimate): Candidate estimates, nonempty
        target (SmoothedDataset): Target curves (full training set)
        plan (SplitPlan): Splits of ``target``
        constants (AggregationConstants): Margin constants

    Returns:
        CoefEstimate: tagged ``aotl``; ``info`` records the chosen indices
            into ``candidates`` and the weight
    '''
    if len(candidates) == 0:
        raise InvalidArgumentError('aotl: no candidates to aggregate')
    if len(plan.idx_021) == 0 or len(plan.idx_022) == 0:
        raise InvalidArgumentError('aotl: degenerate split, D021 and D022 '
                                   'must be nonempty')
    i21, i22 = plan.idx_021, plan.idx_022

    r1_21 = np.array([risk_r1(f, target, i21) for f in candidates])
    star = int(np.argmin(r1_21))
    beta_star = candidates[star]

    kept = []
    for i, theta in enumerate(candidates):
        margin = constants.b1 * max(
            constants.b2 ** 2,
            constants.b2 * math.sqrt(dist_r2(beta_star, theta, target, i21)))
        if r1_21[i] <= r1_21[star] + margin:
            kept.append(i)

    r1_star_22 = risk_r1(beta_star, target, i22)
    best = None
    for i in kept:
        theta = candidates[i]
        a = _blend_weight(risk_r1(theta, target, i22), r1_star_22,
                          dist_r2(beta_star, theta, target, i22))
        blend = a * beta_star.c + (1.0 - a) * theta.c
        risk = risk_r1(CoefEstimate(blend, 'aotl', beta_star.basis), target,
                       i22)
        if best is None or risk < best[0]:
            best = (risk, i, a, blend)

    risk, i, a, blend = best
    logger.debug('aggregation: star=%d, kept=%s, theta=%d, a=%.4f', star,
                 kept, i, a)
    return CoefEstimate(blend, 'aotl', beta_star.basis,
                        info={'star': star, 'theta': i, 'weight': a,
                              'kept': kept, 'risk_022': risk})


def run_aotl(target, sources, policy, rng, alpha=_DEFAULT_ALPHA,
             source_fits=None, variance_mode='homoskedastic'):
    '''
    Aggregated offset transfer learning end to end.

    Parameters:
        target (SmoothedDataset): Target training curves with responses
        sources (list of SmoothedDataset): Source curves with responses
        policy (LambdaPolicy): How lambda^(k), lambda_K and lambda_O are set
        rng (np.random.Generator): Drives the target splits and the CV folds
        alpha (float): Confidence level of the aggregation margin
        source_fits (list of CoefEstimate): Local source estimates, fitted
            here when None

    Returns:
        CoefEstimate: tagged ``aotl``; ``info`` holds the candidate sets,
            the split sizes and the aggregation constants
    '''
    if len(sources) < 1:
        raise InvalidArgumentError('aotl: need at least one source')
    if source_fits is None:
        source_fits = [fit_local(sm, policy.local(sm, rng),
                                 variance_mode).estimate() for sm in sources]

    plan = make_split(target.n, rng)
    target_01 = target.subset(plan.idx_01)
    beta_01 = fit_local(target_01, policy.local(target_01, rng),
                        variance_mode).estimate()

    sets, dists = candidate_sets(beta_01, source_fits, target_01)
    candidates = [beta_01]
    for members in sets:
        pool = [sources[m - 1] for m in members]
        pooled = fit_pooled(pool, policy.pooled(pool, rng))
        candidates.append(
            fit_offset(pooled, target_01,
                       policy.offset(pooled, target_01, rng)))

    preds = np.concatenate([np.abs(predict(f, target)) for f in candidates])
    b3 = max(float(np.max(np.abs(target.y))), float(np.max(preds)))
    constants = AggregationConstants.from_bound(b3, len(sources), target.n,
                                                alpha)

    result = hyper_sparse_aggregate(candidates, target, plan, constants)
    info = dict(result.info)
    info.update({'candidate_sets': sets, 'distances': dists,
                 'split_sizes': (plan.idx_01.size, plan.idx_021.size,
                                 plan.idx_022.size),
                 'b1': constants.b1, 'b2': constants.b2, 'b3': constants.b3})
    return CoefEstimate(result.c, 'aotl', result.basis, info=info)
