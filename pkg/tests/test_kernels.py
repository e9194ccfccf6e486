import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import spherical_in

from stokes_tumor.errors import BracketError, DomainError, RangeError, StepSizeError
from stokes_tumor.kernels import (
    RadialGrid,
    Tolerance,
    bessel_i_spherical,
    find_root,
    integrate_ivp,
    quad,
)


class TestTolerance:
    def test_defaults_positive(self):
        t = Tolerance()
        assert t.rel > 0 and t.abs > 0

    @pytest.mark.parametrize("rel,abs_", [(0.0, 1e-12), (1e-10, -1.0), (math.nan, 1e-12), (1e-10, math.inf)])
    def test_rejects_invalid(self, rel, abs_):
        with pytest.raises(ValueError):
            Tolerance(rel, abs_)


class TestRadialGrid:
    def test_chebyshev_endpoints_and_monotone(self):
        g = RadialGrid.chebyshev(2.5, 101)
        assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.5
        assert np.all(np.diff(g.nodes) > 0)
        assert len(g) == 101

    def test_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            RadialGrid(np.array([0.0, 0.5, 0.5, 1.0]), 1.0)

    def test_scaled(self):
        g = RadialGrid.chebyshev(2.0, 11).scaled(0.5)
        assert g.R == 1.0 and g.nodes[-1] == 1.0


class TestIntegrateIVP:
    def test_constant_solution(self):
        tr = integrate_ivp(lambda r, y: np.zeros_like(y), 0.0, 1.0, [1.0], Tolerance(1e-10, 1e-12))
        assert tr.y_end[0] == 1.0

    def test_exponential(self):
        tr = integrate_ivp(lambda r, y: y, 0.0, 1.0, [1.0], Tolerance(1e-10, 1e-12))
        assert abs(tr.y_end[0] - math.e) < 1e-9

    def test_sinh_over_r_with_series_start(self):
        r0 = 1e-6

        def rhs(r, y):
            return np.array([y[1], -2 * y[1] / r + y[0]])

        tr = integrate_ivp(rhs, r0, 1.0, [1 + r0**2 / 6, r0 / 3], Tolerance(1e-12, 1e-14))
        assert abs(tr.y_end[0] - math.sinh(1.0)) < 1e-8
        x = np.linspace(0.01, 1.0, 37)
        assert np.max(np.abs(tr(x)[:, 0] - np.sinh(x) / x)) < 1e-8

    def test_dense_derivative_matches_rhs(self):
        tr = integrate_ivp(lambda r, y: np.array([np.cos(r)]), 0.0, 3.0, [0.0], Tolerance(1e-11, 1e-13))
        # exact at accepted steps, second order in between
        assert np.max(np.abs(tr.derivative(tr.r)[:, 0] - np.cos(tr.r))) < 1e-14
        x = np.linspace(0, 3, 11)
        assert np.max(np.abs(tr.derivative(x)[:, 0] - np.cos(x))) < 1e-5

    def test_linear_homogeneity(self):
        rhs = lambda r, y: np.array([y[1], -y[0] * (1 + r)])
        tol = Tolerance(1e-10, 1e-300)
        a = integrate_ivp(rhs, 0.0, 2.0, [1.0, 0.5], tol).y_end
        b = integrate_ivp(rhs, 0.0, 2.0, [3.0, 1.5], tol).y_end
        assert np.allclose(3 * a, b, rtol=1e-14, atol=0)

    def test_non_finite_rhs(self):
        with pytest.raises(DomainError):
            integrate_ivp(lambda r, y: np.array([math.nan]), 0.0, 1.0, [1.0], Tolerance())

    def test_finite_time_blowup_reports_step_failure(self):
        with pytest.raises((StepSizeError, DomainError)):
            integrate_ivp(lambda r, y: y * y, 0.0, 2.0, [1.0], Tolerance(1e-10, 1e-12))

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            integrate_ivp(lambda r, y: y, 1.0, 0.0, [1.0], Tolerance())


class TestQuad:
    def test_polynomials(self):
        assert abs(quad(lambda r: r**2, 0, 1) - 1 / 3) < 1e-14
        assert abs(quad(lambda r: r**4, 0, 1) - 1 / 5) < 1e-14

    def test_zero_integrand(self):
        assert quad(lambda r: 0.0 * r, 0, 1) == 0.0

    def test_scalar_returning_integrand(self):
        assert abs(quad(lambda r: 2.0, 0, 1) - 2.0) < 1e-14

    def test_empty_interval(self):
        assert quad(lambda r: r, 1.0, 1.0) == 0.0

    def test_non_finite(self):
        with pytest.raises(DomainError):
            quad(lambda r: np.full_like(r, np.nan), 0, 1)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(1.0, 3.0), st.floats(0.1, 5.0))
    def test_additive(self, a, width, k):
        f = lambda x: np.exp(-k * x) * np.sin(3 * x)
        b, c = a + width / 2, a + width
        tol = Tolerance(1e-10, 1e-12)
        whole = quad(f, a, c, tol)
        parts = quad(f, a, b, tol) + quad(f, b, c, tol)
        assert abs(whole - parts) <= 2 * (1e-10 * abs(whole) + 1e-12) + 1e-15


class TestFindRoot:
    def test_linear(self):
        assert abs(find_root(lambda x: x - 1, 0, 2) - 1) < 1e-14

    def test_sqrt2(self):
        assert abs(find_root(lambda x: x * x - 2, 1, 2) - math.sqrt(2)) < 1e-7

    def test_endpoint_root(self):
        assert find_root(lambda x: x, 0.0, 1.0) == 0.0

    def test_no_sign_change(self):
        with pytest.raises(BracketError):
            find_root(lambda x: x * x + 1, -1, 1)


class TestBessel:
    def test_i0(self):
        assert abs(bessel_i_spherical(0, 1.0) - math.sinh(1.0)) < 1e-15

    def test_at_zero(self):
        assert bessel_i_spherical(0, 0.0) == 1.0
        assert all(bessel_i_spherical(l, 0.0) == 0.0 for l in range(1, 6))

    def test_recurrence_residual(self):
        x, l = 2.0, 3
        res = bessel_i_spherical(l - 1, x) - bessel_i_spherical(l + 1, x) - (2 * l + 1) / x * bessel_i_spherical(l, x)
        assert abs(res) < 1e-10

    @pytest.mark.parametrize("l", [0, 1, 2, 5, 10, 30])
    def test_against_reference(self, l):
        for x in [1e-3, 0.3, 1.0, 2.5, 7.0, 40.0]:
            ref = spherical_in(l, x)
            assert abs(bessel_i_spherical(l, x) - ref) <= 1e-12 * abs(ref)

    @pytest.mark.parametrize("l", [0, 1, 3, 7])
    def test_ode_residual(self, l):
        h = 1e-3
        for x in np.linspace(0.1, 10, 9):
            u = [bessel_i_spherical(l, x + k * h) for k in (-2, -1, 0, 1, 2)]
            up = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
            upp = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
            res = upp + 2 * up / x - (l * (l + 1) / x**2 + 1) * u[2]
            assert abs(res) < 1e-8 * max(1.0, abs(u[2]))

    def test_range(self):
        with pytest.raises(RangeError):
            bessel_i_spherical(2, 1e4)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_i_spherical(-1, 1.0)
        with pytest.raises(ValueError):
            bessel_i_spherical(1, -1.0)
