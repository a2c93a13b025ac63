"""Tests for aggregated offset transfer learning."""

import math

import numpy as np
import pytest

from lib.aotl import AggregationConstants, SplitPlan, candidate_sets, \
    dist_r2, hyper_sparse_aggregate, make_split, risk_r1, run_aotl
from lib.errors import InvalidArgumentError
from lib.estimators import LambdaPolicy, fit_local
from lib.smoothing import CoefEstimate, predict


def _scaled_estimates(target, scales, direction):
    return [CoefEstimate(s * direction, 'local', target.basis)
            for s in scales]


class TestAggregationConstants:
    """b1 = 4 (1 + 9 b3) and b2 = b3 sqrt((ln(K + 1) + alpha) / n0)."""

    def test_values(self):
        c = AggregationConstants.from_bound(2.0, 4, 100)
        assert c.b1 == pytest.approx(76.0)
        assert c.b2 == pytest.approx(2.0 * math.sqrt((math.log(5) + 0.05)
                                                     / 100))
        assert c.alpha == 0.05

    def test_bad_alpha(self):
        for alpha in (0.0, 1.0, -0.2):
            with pytest.raises(InvalidArgumentError):
                AggregationConstants.from_bound(1.0, 2, 10, alpha)

    def test_bad_bound(self):
        with pytest.raises(InvalidArgumentError):
            AggregationConstants.from_bound(-1.0, 2, 10)


class TestMakeSplit:
    """make_split partitions the target into D01, D021 and D022."""

    @pytest.mark.parametrize('n0, sizes', [(10, (5, 3, 2)), (4, (2, 1, 1)),
                                           (7, (4, 2, 1)), (60, (30, 15, 15))])
    def test_sizes(self, rng, n0, sizes):
        plan = make_split(n0, rng)
        assert (plan.idx_01.size, plan.idx_021.size,
                plan.idx_022.size) == sizes
        both = np.concatenate([plan.idx_01, plan.idx_021, plan.idx_022])
        np.testing.assert_array_equal(np.sort(both), np.arange(n0))

    def test_too_small(self, rng):
        with pytest.raises(InvalidArgumentError):
            make_split(3, rng)

    def test_reproducible(self):
        a = make_split(20, np.random.default_rng(4))
        b = make_split(20, np.random.default_rng(4))
        np.testing.assert_array_equal(a.idx_021, b.idx_021)


class TestRisks:
    """risk_r1 and dist_r2 on index sets."""

    def test_r1_oracle(self, small_smoothed, rng):
        target = small_smoothed[0]
        f = CoefEstimate(rng.standard_normal(7), 'local', target.basis)
        idx = np.array([0, 5, 9])
        resid = target.y[idx] - target.features[:, idx].T @ f.c
        assert risk_r1(f, target, idx) == pytest.approx(np.mean(resid ** 2))

    def test_r1_all_subjects(self, small_smoothed):
        target = small_smoothed[0]
        zero = CoefEstimate(np.zeros(7), 'local', target.basis)
        assert risk_r1(zero, target) == pytest.approx(np.mean(target.y ** 2))

    def test_r2_symmetric_and_zero(self, small_smoothed, rng):
        target = small_smoothed[0]
        f1 = CoefEstimate(rng.standard_normal(7), 'local', target.basis)
        f2 = CoefEstimate(rng.standard_normal(7), 'otl', target.basis)
        assert dist_r2(f1, f1, target) == 0.0
        assert dist_r2(f1, f2, target) == pytest.approx(
            dist_r2(f2, f1, target))

    def test_empty_index(self, small_smoothed):
        target = small_smoothed[0]
        zero = CoefEstimate(np.zeros(7), 'local', target.basis)
        with pytest.raises(InvalidArgumentError):
            risk_r1(zero, target, [])


class TestCandidateSets:
    """Nested sets ordered by distance to the target estimate."""

    def test_ordering(self, small_smoothed, rng):
        target = small_smoothed[0]
        direction = rng.standard_normal(7)
        zero = CoefEstimate(np.zeros(7), 'local', target.basis)
        fits = _scaled_estimates(target, np.sqrt([3.0, 1.0, 2.0]), direction)
        sets, dists = candidate_sets(zero, fits, target)
        assert sets == [[2], [2, 3], [1, 2, 3]]
        unit = np.mean(predict(fits[1], target) ** 2)
        np.testing.assert_allclose(dists, unit * np.array([3.0, 1.0, 2.0]),
                                   rtol=1e-10)

    def test_ties_go_to_smaller_index(self, small_smoothed, rng):
        target = small_smoothed[0]
        direction = rng.standard_normal(7)
        zero = CoefEstimate(np.zeros(7), 'local', target.basis)
        fits = _scaled_estimates(target, [2.0, 1.0, 1.0, 2.0], direction)
        sets, _ = candidate_sets(zero, fits, target)
        assert sets == [[2], [2, 3], [1, 2, 3], [1, 2, 3, 4]]

    def test_nested(self, small_smoothed, rng):
        target = small_smoothed[0]
        zero = CoefEstimate(np.zeros(7), 'local', target.basis)
        fits = [CoefEstimate(rng.standard_normal(7), 'local', target.basis)
                for _ in range(5)]
        sets, _ = candidate_sets(zero, fits, target)
        for k in range(1, len(sets)):
            assert set(sets[k - 1]) < set(sets[k])
        assert sets[-1] == [1, 2, 3, 4, 5]

    def test_needs_sources(self, small_smoothed):
        target = small_smoothed[0]
        zero = CoefEstimate(np.zeros(7), 'local', target.basis)
        with pytest.raises(InvalidArgumentError):
            candidate_sets(zero, [], target)


class TestHyperSparseAggregate:
    """Selection, screening and blending of candidates."""

    def test_single_candidate(self, small_smoothed, rng):
        target = small_smoothed[0]
        f = CoefEstimate(rng.standard_normal(7), 'otl', target.basis)
        plan = make_split(target.n, rng)
        constants = AggregationConstants.from_bound(1.0, 1, target.n)
        out = hyper_sparse_aggregate([f], target, plan, constants)
        assert out.info['weight'] == 1.0
        np.testing.assert_array_equal(out.c, f.c)
        assert out.method == 'aotl'

    def test_blend_beats_weight_grid(self, small_smoothed, rng):
        target = small_smoothed[0]
        local = fit_local(target, 1e-3).estimate()
        candidates = [local] + [
            CoefEstimate(local.c + 0.3 * rng.standard_normal(7), 'otl',
                         target.basis) for _ in range(3)]
        plan = make_split(target.n, rng)
        # a large bound keeps every candidate in the screened set
        constants = AggregationConstants.from_bound(1e6, 3, target.n)
        out = hyper_sparse_aggregate(candidates, target, plan, constants)
        assert out.info['kept'] == [0, 1, 2, 3]

        star = candidates[out.info['star']]
        best_grid = np.inf
        for theta in candidates:
            for a in np.linspace(0.0, 1.0, 101):
                blend = CoefEstimate(a * star.c + (1 - a) * theta.c, 'aotl',
                                     target.basis)
                best_grid = min(best_grid,
                                risk_r1(blend, target, plan.idx_022))
        assert risk_r1(out, target, plan.idx_022) <= best_grid + 1e-10

    def test_star_minimizes_screening_risk(self, small_smoothed, rng):
        target = small_smoothed[0]
        candidates = [CoefEstimate(rng.standard_normal(7), 'otl',
                                   target.basis) for _ in range(4)]
        plan = make_split(target.n, rng)
        constants = AggregationConstants.from_bound(1.0, 3, target.n)
        out = hyper_sparse_aggregate(candidates, target, plan, constants)
        risks = [risk_r1(f, target, plan.idx_021) for f in candidates]
        assert out.info['star'] == int(np.argmin(risks))
        assert 0.0 <= out.info['weight'] <= 1.0

    def test_degenerate_split(self, small_smoothed):
        target = small_smoothed[0]
        f = CoefEstimate(np.zeros(7), 'otl', target.basis)
        plan = SplitPlan(np.arange(30), np.arange(30, 60),
                         np.array([], dtype=int))
        constants = AggregationConstants.from_bound(1.0, 1, target.n)
        with pytest.raises(InvalidArgumentError):
            hyper_sparse_aggregate([f], target, plan, constants)

    def test_no_candidates(self, small_smoothed, rng):
        target = small_smoothed[0]
        plan = make_split(target.n, rng)
        constants = AggregationConstants.from_bound(1.0, 1, target.n)
        with pytest.raises(InvalidArgumentError):
            hyper_sparse_aggregate([], target, plan, constants)


class TestRunAotl:
    """run_aotl end to end on a small simulated replicate."""

    def test_result(self, small_smoothed):
        target, sources = small_smoothed
        out = run_aotl(target, sources, LambdaPolicy(lam=1e-3),
                       np.random.default_rng(5))
        assert out.method == 'aotl'
        assert np.all(np.isfinite(out.c))
        assert len(out.info['candidate_sets']) == len(sources)
        assert sum(out.info['split_sizes']) == target.n
        assert out.info['b1'] == pytest.approx(4 * (1 + 9 * out.info['b3']))

    def test_reproducible(self, small_smoothed):
        target, sources = small_smoothed
        a = run_aotl(target, sources, LambdaPolicy(lam=1e-3),
                     np.random.default_rng(5))
        b = run_aotl(target, sources, LambdaPolicy(lam=1e-3),
                     np.random.default_rng(5))
        np.testing.assert_array_equal(a.c, b.c)

    def test_precomputed_source_fits(self, small_smoothed):
        target, sources = small_smoothed
        fits = [fit_local(sm, 1e-3).estimate() for sm in sources]
        a = run_aotl(target, sources, LambdaPolicy(lam=1e-3),
                     np.random.default_rng(5), source_fits=fits)
        b = run_aotl(target, sources, LambdaPolicy(lam=1e-3),
                     np.random.default_rng(5))
        np.testing.assert_array_equal(a.c, b.c)

    def test_needs_sources(self, small_smoothed):
        with pytest.raises(InvalidArgumentError):
            run_aotl(small_smoothed[0], [], LambdaPolicy(lam=1e-3),
                     np.random.default_rng(5))
