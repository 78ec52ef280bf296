"""LGL grid machinery: nodes, weights, differentiation, interpolation."""

import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial, legendre
from numpy.testing import assert_allclose

from psdae import basis


def exact_monomial_integral(k: int) -> float:
    """Independent oracle: integral of tau^k over [-1, 1]."""
    return 0.0 if k % 2 else 2.0 / (k + 1)


class TestNodes:
    def test_n1_endpoints(self):
        assert_allclose(basis.lgl_nodes(1), [-1.0, 1.0], atol=0)

    def test_n2_midpoint(self):
        # root of L2'(tau) = 3 tau
        assert_allclose(basis.lgl_nodes(2), [-1.0, 0.0, 1.0], atol=1e-15)

    def test_n4_closed_form(self):
        # interior nodes are the roots of L4'; +-sqrt(3/7) analytically
        r = math.sqrt(3.0 / 7.0)
        assert_allclose(basis.lgl_nodes(4), [-1.0, -r, 0.0, r, 1.0], atol=1e-12)

    def test_n4_against_polynomial_rooting(self):
        # independent route: roots of (numpy-differentiated) Legendre L4
        dL4 = legendre.Legendre.basis(4).deriv()
        roots = np.sort(dL4.roots())
        assert_allclose(basis.lgl_nodes(4)[1:-1], roots, atol=1e-12)

    @pytest.mark.parametrize("N", [3, 8, 17, 40, 100])
    def test_structure(self, N):
        nodes = basis.lgl_nodes(N)
        assert nodes[0] == -1.0 and nodes[-1] == 1.0
        assert np.all(np.diff(nodes) > 0)
        assert_allclose(nodes, -nodes[::-1], atol=1e-14)

    def test_invalid_order(self):
        with pytest.raises(basis.InvalidOrderError):
            basis.lgl_nodes(0)
        with pytest.raises(basis.InvalidOrderError):
            basis.lgl_nodes(-3)


class TestWeights:
    def test_n1(self):
        assert_allclose(basis.lgl_weights(basis.lgl_nodes(1)), [1.0, 1.0], atol=1e-15)

    def test_n2_closed_form(self):
        w = basis.lgl_weights(basis.lgl_nodes(2))
        assert_allclose(w, [1 / 3, 4 / 3, 1 / 3], atol=1e-14)
        # cross-check: exact integration of 1, tau^2, tau^3
        nodes = basis.lgl_nodes(2)
        for k in (0, 2, 3):
            assert_allclose(w @ nodes**k, exact_monomial_integral(k), atol=1e-14)

    def test_n4_closed_form(self):
        w = basis.lgl_weights(basis.lgl_nodes(4))
        assert_allclose(w, [1 / 10, 49 / 90, 32 / 45, 49 / 90, 1 / 10], atol=1e-14)
        nodes = basis.lgl_nodes(4)
        for k in range(8):  # exact through degree 2N-1 = 7
            assert_allclose(w @ nodes**k, exact_monomial_integral(k), atol=1e-13)

    @pytest.mark.parametrize("N", [2, 7, 16, 33, 40])
    def test_sum_is_two(self, N):
        assert abs(basis.lgl_weights(basis.lgl_nodes(N)).sum() - 2.0) < 1e-13

    @pytest.mark.parametrize("N", [3, 9, 21, 40])
    def test_quadrature_exact_to_2n_minus_1(self, N, rng):
        grid = basis.lgl_grid(N)
        for _ in range(5):
            p = Polynomial(rng.standard_normal(2 * N))  # degree 2N-1
            exact = p.integ()(1.0) - p.integ()(-1.0)
            scale = np.abs(p.coef).sum()
            assert abs(grid.weights @ p(grid.nodes) - exact) <= 1e-10 * max(scale, 1.0)


class TestDiffMatrix:
    def test_n1_frozen(self):
        g = basis.lgl_grid(1)
        assert_allclose(g.diff_matrix, [[-0.5, 0.5], [-0.5, 0.5]], atol=1e-15)

    def test_n2_frozen(self):
        g = basis.lgl_grid(2)
        expected = [[-1.5, 2.0, -0.5], [-0.5, 0.0, 0.5], [0.5, -2.0, 1.5]]
        assert_allclose(g.diff_matrix, expected, atol=1e-14)

    @pytest.mark.parametrize("N", [2, 9, 24, 40])
    def test_annihilates_constants(self, N):
        g = basis.lgl_grid(N)
        assert np.max(np.abs(g.diff_matrix @ np.ones(N + 1))) < 1e-12

    @pytest.mark.parametrize("N", [4, 12, 33])
    def test_monomials(self, N):
        g = basis.lgl_grid(N)
        for k in range(1, N + 1):
            d = g.diff_matrix @ g.nodes**k
            exact = k * g.nodes ** (k - 1)
            assert_allclose(d, exact, atol=1e-9 * max(1.0, np.abs(exact).max()))

    @pytest.mark.parametrize("N", [5, 18, 40])
    def test_random_polynomials(self, N, rng):
        g = basis.lgl_grid(N)
        for _ in range(5):
            p = Polynomial(rng.standard_normal(N + 1))
            dp = p.deriv()
            err = np.max(np.abs(g.diff_matrix @ p(g.nodes) - dp(g.nodes)))
            assert err <= 1e-9 * max(1.0, np.abs(dp(g.nodes)).max())

    @pytest.mark.parametrize("N", [3, 10, 25])
    def test_reversal_antisymmetry(self, N):
        g = basis.lgl_grid(N)
        rev_nodes = -g.nodes[::-1]
        rev = basis.diff_matrix(rev_nodes, basis.barycentric_weights(rev_nodes))
        assert_allclose(rev, -g.diff_matrix[::-1, ::-1], atol=1e-12 * N * N)


class TestInterpolate:
    def test_nodal_exactness(self, rng):
        g = basis.lgl_grid(9)
        vals = rng.standard_normal(10)
        for j, tau in enumerate(g.nodes):
            assert basis.interpolate(g.nodes, g.bary_weights, vals, tau) == vals[j]

    def test_constant(self):
        g = basis.lgl_grid(6)
        for tau in np.linspace(-1, 1, 11):
            assert_allclose(g.interpolate(np.full(7, 2.5), tau), 2.5, atol=1e-14)

    def test_quadratic_reproduction(self):
        g = basis.lgl_grid(2)
        assert_allclose(g.interpolate(g.nodes**2, 0.5), 0.25, atol=1e-14)

    def test_polynomial_reproduction(self, rng):
        g = basis.lgl_grid(8)
        p = Polynomial(rng.standard_normal(9))
        for tau in np.linspace(-1, 1, 23):
            assert_allclose(g.interpolate(p(g.nodes), tau), p(tau), atol=1e-11)

    def test_domain_error(self):
        g = basis.lgl_grid(3)
        with pytest.raises(basis.DomainError):
            g.interpolate(np.zeros(4), 1.5)
        with pytest.raises(basis.DomainError):
            g.interpolate(np.zeros(4), -1.0001)

    def test_spectral_decay_of_exp(self):
        # interpolation error of exp(tau) decays at least geometrically
        # until it hits the round-off plateau
        taus = np.linspace(-1, 1, 501)
        errors = []
        for N in range(4, 26, 4):
            g = basis.lgl_grid(N)
            vals = np.array([g.interpolate(np.exp(g.nodes), t) for t in taus])
            errors.append(np.max(np.abs(vals - np.exp(taus))))
        for a, b in zip(errors, errors[1:]):
            assert b < 0.5 * a or b < 1e-13
        assert errors[-1] < 1e-13


class TestGrid:
    def test_immutability(self):
        g = basis.lgl_grid(5)
        with pytest.raises(ValueError):
            g.nodes[0] = 0.0
        with pytest.raises(ValueError):
            g.diff_matrix[0, 0] = 1.0

    def test_n100_robust(self):
        g = basis.lgl_grid(100)
        assert abs(g.weights.sum() - 2.0) < 1e-13
        assert np.all(np.diff(g.nodes) > 0)
