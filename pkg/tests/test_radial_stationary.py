import math

import numpy as np
import pytest

from stokes_tumor.errors import BracketError
from stokes_tumor.model import ModelParams, canonical_model, general_model
from stokes_tumor.radial_stationary import (
    find_stationary,
    mass_balance_residual,
    rescale_to_unit,
    solve_sigma_profile,
    write_profile_csv,
)

from conftest import SIGMA_C_UNIT


def closed_form(r, lam=1.0, R=1.0):
    k = math.sqrt(lam)
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = R * np.sinh(k * r) / (r * np.sinh(k * R))
    return np.where(r > 0, val, k * R / math.sinh(k * R))


def test_profile_matches_closed_form():
    fns = canonical_model(ModelParams(1.0, 1.0, 0.5))
    prof = solve_sigma_profile(fns, 1.0)
    assert abs(prof.sigma0 - 1 / math.sinh(1.0)) < 1e-8
    assert abs(prof.sigma_prime_at_R - (1 / math.tanh(1.0) - 1)) < 1e-8
    assert abs(prof.state(np.array([1.0]))[0, 0] - 1.0) < 1e-12


def test_mass_balance_zero_at_unit_radius():
    fns = canonical_model(ModelParams(1.0, 1.0, SIGMA_C_UNIT))
    assert abs(mass_balance_residual(fns, 1.0)) < 1e-10


def test_mass_balance_at_half_radius_against_quadrature():
    # brute-force oracle: trapezoid quadrature of g(closed form) r^2 on [0, 1/2]
    fns = canonical_model(ModelParams(1.0, 1.0, SIGMA_C_UNIT))
    r = np.linspace(0, 0.5, 200001)
    oracle = np.trapezoid((closed_form(r, R=0.5) - SIGMA_C_UNIT) * r**2, r)
    value = mass_balance_residual(fns, 0.5)
    assert abs(value - oracle) < 1e-10
    # sigma stays above sigma_c on small balls, so the mass balance is positive here
    assert value > 0


class TestCanonicalStationary:
    def test_radius(self, canonical):
        _, st = canonical
        assert abs(st.R_s - 1.0) < 1e-6
        assert abs(3 * (1 / math.tanh(st.R_s) / st.R_s - 1 / st.R_s**2) - SIGMA_C_UNIT) < 1e-6

    def test_profiles(self, canonical):
        fns, st = canonical
        r = st.grid.nodes
        ref = closed_form(r)
        assert np.max(np.abs(st.sigma_s - ref) / ref) < 1e-8
        assert st.invariant_violations() == []
        assert abs(st.p_s[-1] - st.gamma / st.R_s - 4 / 3 * fns.g(1.0)) < 1e-8

    def test_velocity_from_mass_flux(self, canonical):
        fns, st = canonical
        r = np.linspace(0.05, 0.95, 7)
        for x in r:
            s = np.linspace(0, x, 20001)
            oracle = np.trapezoid(fns.g(closed_form(s)) * s**2, s) / x**2
            assert abs(st.v(x) - oracle) < 1e-9

    def test_interpolants(self, canonical):
        _, st = canonical
        x = np.linspace(0.0, 1.0, 301)
        assert np.max(np.abs(st.sigma(x) - closed_form(x))) < 1e-10


def test_radius_grows_as_sigma_c_drops():
    r_hi = find_stationary(canonical_model(ModelParams(1.0, 1.0, 0.93))).R_s
    r_lo = find_stationary(canonical_model(ModelParams(1.0, 1.0, 0.9))).R_s
    assert r_lo > r_hi


def test_surface_tension_enters_pressure():
    fns = canonical_model(ModelParams(1.0, 1.0, SIGMA_C_UNIT, gamma=0.3))
    st = find_stationary(fns)
    assert abs(st.p_s[-1] - (0.3 / st.R_s + 4 / 3 * fns.g(1.0))) < 1e-8


def test_no_sign_change_in_bracket():
    fns = canonical_model(ModelParams(1.0, 1.0, SIGMA_C_UNIT))
    with pytest.raises(BracketError):
        find_stationary(fns, bracket=(2.0, 5.0))


def test_rescale_identity(canonical):
    fns, st = canonical
    st1, fns1 = rescale_to_unit(st, fns)
    if st.R_s == 1.0:
        assert st1 is st
    assert np.allclose(st1.sigma_s, st.sigma_s, rtol=0, atol=1e-15)


def test_rescale_radius_two():
    sigma_c = 3 * (1 / math.tanh(2.0) / 2 - 0.25)
    fns = canonical_model(ModelParams(1.0, 1.0, sigma_c))
    st = find_stationary(fns)
    assert abs(st.R_s - 2.0) < 1e-6
    st1, fns1 = rescale_to_unit(st)
    assert st1.R_s == 1.0 and st1.invariant_violations() == []
    assert abs(fns1.f_prime(0.5) - 4 * st.R_s**2 / 4) < 1e-12
    x = np.linspace(0, 1, 41)
    assert np.max(np.abs(st1.sigma(x) - st.sigma(st.R_s * x))) < 1e-12
    # re-solving on the unit ball with the rescaled laws reproduces the profile
    direct = find_stationary(fns1)
    assert abs(direct.R_s - 1.0) < 1e-7
    assert np.max(np.abs(direct.sigma(x) - st1.sigma(x))) < 1e-7
    assert np.max(np.abs(direct.v(x) - st1.v(x))) < 1e-7
    assert np.max(np.abs(st1.sigma(x) - closed_form(x, lam=4.0))) < 1e-7


def test_nonlinear_laws():
    fns = general_model(lambda s: s * (1 + s), lambda s: 2 * (s - 0.8) + (s - 0.8) ** 3)
    st = find_stationary(fns)
    assert st.invariant_violations() == []
    assert abs(mass_balance_residual(fns, st.R_s)) < 1e-9


def test_profile_csv(tmp_path, canonical):
    _, st = canonical
    path = write_profile_csv(st, tmp_path / "p.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "r,sigma_s,v_s,p_s"
    assert len(lines) == len(st.grid) + 1
    row = [float(x) for x in lines[-1].split(",")]
    assert row[0] == st.R_s and row[1] == st.sigma_s[-1]
