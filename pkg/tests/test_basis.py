"""Tests for the Fourier basis and the Legendre pair."""

import numpy as np
import pytest

from lib.basis import default_M, eval_basis, fourier_basis, legendre_pair
from lib.errors import InvalidArgumentError
from lib.utils import trapezoid_weights


def _quad(values, n_points):
    '''Trapezoid rule on an even grid of [0, 1] along axis 0'''
    d = trapezoid_weights(n_points) / (n_points - 1)
    return np.tensordot(d, values, axes=(0, 0))


class TestFourierBasis:
    """fourier_basis builds Psi = I and a diagonal W."""

    def test_constant_basis(self):
        b = fourier_basis(1)
        np.testing.assert_array_equal(b.psi, [[1.0]])
        np.testing.assert_array_equal(b.w, [[0.0]])

    def test_penalty_m5(self):
        b = fourier_basis(5)
        expected = 16 * np.pi ** 4 * np.diag([0, 1, 1, 16, 16])
        np.testing.assert_allclose(b.w, expected, rtol=1e-14)
        np.testing.assert_array_equal(b.psi, np.eye(5))

    def test_penalty_rank(self):
        for M in (2, 5, 10):
            eig = np.linalg.eigvalsh(fourier_basis(M).w)
            assert np.sum(eig < 1e-8 * eig.max()) == 1

    def test_gram_matches_quadrature(self):
        n = 10001
        t = np.linspace(0, 1, n)
        for M in (3, 9):
            phi = eval_basis(fourier_basis(M), t)
            gram = _quad(phi[:, :, None] * phi[:, None, :], n)
            np.testing.assert_allclose(gram, np.eye(M), atol=1e-8)

    def test_penalty_matches_quadrature(self):
        n = 10001
        t = np.linspace(0, 1, n)
        b = fourier_basis(7)
        d2 = eval_basis(b, t, deriv=2)
        w = _quad(d2[:, :, None] * d2[:, None, :], n)
        scale = np.max(np.abs(b.w))
        np.testing.assert_allclose(w / scale, b.w / scale, atol=1e-6)

    def test_invalid_size(self):
        with pytest.raises(InvalidArgumentError):
            fourier_basis(0)
        with pytest.raises(InvalidArgumentError):
            fourier_basis(2.5)

    def test_arrays_read_only(self):
        b = fourier_basis(3)
        with pytest.raises(ValueError):
            b.w[0, 0] = 1.0


class TestEvalBasis:
    """eval_basis evaluates phi_m(t_j)."""

    def test_at_zero(self):
        row = eval_basis(fourier_basis(3), [0.0])
        np.testing.assert_allclose(row, [[1.0, np.sqrt(2), 0.0]], atol=1e-15)

    def test_at_quarter(self):
        row = eval_basis(fourier_basis(3), [0.25])
        np.testing.assert_allclose(row, [[1.0, 0.0, np.sqrt(2)]], atol=1e-15)

    def test_even_grid_gram(self):
        J = 50
        phi = eval_basis(fourier_basis(49), np.linspace(0, 1, J))
        dev = np.max(np.abs(phi.T @ phi / J - np.eye(49)))
        # The doubled end point is the only departure from discrete
        # orthogonality, so the deviation is O(1 / J)
        assert dev < 4.0 / J

    def test_second_derivative(self):
        b = fourier_basis(7)
        t = np.linspace(0.1, 0.9, 9)
        h = 1e-4
        fd = (eval_basis(b, t + h) - 2 * eval_basis(b, t)
              + eval_basis(b, t - h)) / h ** 2
        np.testing.assert_allclose(eval_basis(b, t, deriv=2), fd, atol=1e-2)

    def test_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            eval_basis(fourier_basis(3), [0.5, 1.2])
        with pytest.raises(InvalidArgumentError):
            eval_basis(fourier_basis(3), [-0.1])

    def test_bad_derivative(self):
        with pytest.raises(InvalidArgumentError):
            eval_basis(fourier_basis(3), [0.5], deriv=1)


class TestDefaultM:
    """default_M(J) = 1 + 2 floor((J - 1) / 2)."""

    @pytest.mark.parametrize('J, M', [(50, 49), (2, 1), (51, 51), (3, 3)])
    def test_values(self, J, M):
        assert default_M(J) == M

    def test_too_small(self):
        with pytest.raises(InvalidArgumentError):
            default_M(1)


class TestLegendrePair:
    """Normalized shifted Legendre polynomials of orders 1 and 2."""

    def test_midpoint(self):
        p1, p2 = legendre_pair([0.5])
        np.testing.assert_allclose(p1, [0.0], atol=1e-15)
        np.testing.assert_allclose(p2, [-np.sqrt(5) / 2])

    def test_zero(self):
        p1, p2 = legendre_pair([0.0])
        np.testing.assert_allclose(p1, [-np.sqrt(3)])
        np.testing.assert_allclose(p2, [np.sqrt(5)])

    def test_orthonormal(self):
        n = 100001
        p1, p2 = legendre_pair(np.linspace(0, 1, n))
        assert abs(_quad(p1 * p1, n) - 1) < 1e-8
        assert abs(_quad(p2 * p2, n) - 1) < 1e-8
        assert abs(_quad(p1 * p2, n)) < 1e-8
        assert abs(_quad(p1, n)) < 1e-8
