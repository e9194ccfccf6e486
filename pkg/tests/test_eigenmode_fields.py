import dataclasses
import json
import math

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.special import spherical_in

from stokes_tumor.eigenmode_fields import (
    assemble_fields,
    boundary_data,
    eigenmode,
    residual_report,
    solve_constants,
    write_eigenmode_json,
    write_fields_csv,
)
from stokes_tumor.errors import TranslationModeError
from stokes_tumor.model import ModelFunctions
from stokes_tumor.mode_solver import solve_mode
from stokes_tumor.radial_stationary import find_stationary, rescale_to_unit
from stokes_tumor.spectrum import alpha_from_threshold, gamma_threshold_l

def bessel_sources(l, sp1):
    """Closed-form G, G' and the V/W source factors for the unit canonical model."""
    scale = -sp1 / spherical_in(l, 1.0)
    kv = math.sqrt((l + 1) / (2 * l + 1))
    kw = math.sqrt(l / (2 * l + 1))

    def G(r):
        return scale * spherical_in(l, r), scale * spherical_in(l, r, derivative=True)

    def S1(r):
        g, gp = G(r)
        return kv * (-gp + l * g / r)

    def S2(r):
        g, gp = G(r)
        return kw * (gp + (l + 1) * g / r)

    return G, S1, S2, kv, kw


def simpson_vt(l, sp1, r, n=10001):
    G, S1, _, kv, _ = bessel_sources(l, sp1)
    s = np.linspace(0.0, r, n)
    s[0] = 1e-12
    integral = simpson(s ** (l + 3) * S1(s), x=s)
    g, _ = G(r)
    return kv * r * g / (2 * l + 3) + integral / (2 * l + 3) / r ** (l + 2)


def simpson_wt(l, sp1, r, n=10001):
    G, _, S2, _, kw = bessel_sources(l, sp1)
    s = np.linspace(r, 1.0, n)
    integral = simpson(s ** (2 - l) * S2(s), x=s)
    g, _ = G(r)
    return kw * r * g / (2 * l - 1) + r ** (l - 1) * integral / (2 * l - 1)


@pytest.fixture(scope="module")
def unit(canonical):
    fns, st = canonical
    st, fns = rescale_to_unit(st, fns)
    return fns, st


def test_boundary_data_against_simpson(unit):
    fns, st = unit
    l = 2
    sp1 = st.sigma_s_prime_at_R
    bd = boundary_data(l, solve_mode(l, st, fns), st, fns)
    h = 1e-4
    assert abs(bd.v_tilde - simpson_vt(l, sp1, 1.0)) < 1e-8
    assert abs(bd.w_tilde - simpson_wt(l, sp1, 1.0 - 1e-15)) < 1e-8
    vp = (simpson_vt(l, sp1, 1.0) - simpson_vt(l, sp1, 1.0 - h)) / h
    wp = (simpson_wt(l, sp1, 1.0 - 1e-15) - simpson_wt(l, sp1, 1.0 - h)) / h
    # one-sided differences: compare at their O(h) accuracy, then the exact combination below
    assert abs(bd.v_tilde_prime - vp) < 1e-4
    assert abs(bd.w_tilde_prime - wp) < 1e-4
    vp2 = (3 * simpson_vt(l, sp1, 1.0) - 4 * simpson_vt(l, sp1, 1 - h) + simpson_vt(l, sp1, 1 - 2 * h)) / (2 * h)
    wp2 = (3 * simpson_wt(l, sp1, 1 - 1e-15) - 4 * simpson_wt(l, sp1, 1 - h) + simpson_wt(l, sp1, 1 - 2 * h)) / (2 * h)
    assert abs(bd.v_tilde_prime - vp2) < 1e-8
    assert abs(bd.w_tilde_prime - wp2) < 1e-8


@pytest.mark.parametrize("l", [2, 3, 7])
def test_boundary_identities(unit, l):
    fns, st = unit
    bd = boundary_data(l, solve_mode(l, st, fns), st, fns)
    flux = fns.g_prime(1.0) * st.sigma_s_prime_at_R
    assert bd.w_tilde_prime / bd.w_tilde == pytest.approx(-l, rel=1e-15)
    assert abs(bd.v_tilde_prime + (l + 2) * bd.v_tilde + math.sqrt((l + 1) / (2 * l + 1)) * flux) < 1e-8


@pytest.mark.parametrize("l", [2, 5])
def test_interior_particular_parts(unit, l):
    fns, st = unit
    mode = solve_mode(l, st, fns)
    consts = solve_constants(l, 0.05, boundary_data(l, mode, st, fns), fns, st)
    f = assemble_fields(l, 0, 0.05, consts, mode, st, fns, n_radii=9)
    sp1 = st.sigma_s_prime_at_R
    for k in (2, 4, 6):
        r = f.r[k]
        assert abs(f.v_tilde[k] - simpson_vt(l, sp1, r)) < 1e-9
        assert abs(f.w_tilde[k] - simpson_wt(l, sp1, r)) < 1e-9


@pytest.mark.parametrize("l", [2, 4, 9])
def test_constants_affine_in_gamma(unit, l):
    fns, st = unit
    bd = boundary_data(l, solve_mode(l, st, fns), st, fns)
    c0 = solve_constants(l, 0.03, bd, fns, st)
    c1 = solve_constants(l, 0.04, bd, fns, st)
    slope = ((c1.A1 + c1.C1_tilde) - (c0.A1 + c0.C1_tilde)) / 0.01
    expected = -(2 * l * l + 5 * l + 2) / (4 * (2 * l * l + 4 * l + 3))
    assert abs(slope - expected) < 1e-10
    assert c0.B1 == 0.0 and c0.a_vec == (0.0, 0.0, 0.0)
    assert c0.combination_residual < 1e-9


def test_rejects_low_degrees(unit):
    fns, st = unit
    mode = solve_mode(2, st, fns)
    with pytest.raises(TranslationModeError) as exc:
        boundary_data(1, mode, st, fns)
    assert exc.value.alpha == 0.0
    with pytest.raises(ValueError):
        boundary_data(0, mode, st, fns)


@pytest.mark.parametrize("l", [2, 3, 6])
def test_field_structure(unit, l):
    fns, st = unit
    mode = solve_mode(l, st, fns)
    f, rep = eigenmode(l, 1, 0.05, mode, st, fns)
    assert f.v_lm[0] == 0.0 and f.w_lm[0] == 0.0 and f.x_lm[0] == 0.0
    assert f.P_lm[-1] == pytest.approx(2 * (2 * l + 3) * f.A1, rel=1e-14)
    flux = fns.g_prime(1.0) * st.sigma_s_prime_at_R
    assert abs(f.psi[-1] - (-4 / 3 * flux + 2 * (2 * l + 3) * f.A1)) < 1e-12
    sel = f.r >= 0.25
    slope = np.polyfit(np.log(f.r[sel]), np.log(np.abs(f.P_lm[sel])), 1)[0]
    assert abs(slope - l) < 1e-8
    assert np.all(f.x_lm == 0.0)
    assert np.allclose(f.phi, mode.evaluate(f.r)[0], rtol=0, atol=1e-15)
    # small radii stay finite and tend to zero
    assert np.all(np.isfinite(f.v_lm)) and abs(f.v_lm[1]) < 1e-3


@pytest.mark.parametrize("l", [2, 6])
@pytest.mark.parametrize("factor", [0.5, 2.0])
def test_residuals_small(unit, spectrum64, l, factor):
    fns, st = unit
    mode = solve_mode(l, st, fns)
    _, rep = eigenmode(l, -1, factor * spectrum64.gamma_star, mode, st, fns)
    assert rep.max_residual() < 1e-6
    assert rep.residuals["multiplier"] < 1e-8
    assert rep.residuals["constraint_translation"] < 1e-8
    assert rep.residuals["constraint_rotation"] < 1e-8
    assert rep.passed()


def test_residuals_detect_wrong_constants(unit):
    fns, st = unit
    l = 4
    mode = solve_mode(l, st, fns)
    consts = solve_constants(l, 0.05, boundary_data(l, mode, st, fns), fns, st)
    bad = dataclasses.replace(consts, A1=consts.A1 * 1.01)
    rep = residual_report(assemble_fields(l, 2, 0.05, bad, mode, st, fns), st, fns)
    assert rep.residuals["traction_normal"] > 1e-6
    assert rep.residuals["multiplier"] > 1e-8
    assert not rep.passed()


def test_nonlinear_laws():
    fns = ModelFunctions(
        f=lambda s: 1.5 * s * (1 + s),
        f_prime=lambda s: 1.5 * (1 + 2 * s),
        g=lambda s: 2 * (s - 0.8) + (s - 0.8) ** 3,
        g_prime=lambda s: 2 + 3 * (s - 0.8) ** 2,
        sigma_c=0.8,
        g_second=lambda s: 6 * (s - 0.8),
        g_third=lambda s: 6.0 + 0.0 * np.asarray(s, dtype=float),
    )
    st, fns = rescale_to_unit(find_stationary(fns))
    for l in (2, 5):
        mode = solve_mode(l, st, fns)
        gl = gamma_threshold_l(l, mode, fns)
        for gamma in (0.5 * gl, 2 * gl):
            _, rep = eigenmode(l, 0, gamma, mode, st, fns)
            assert rep.max_residual() < 1e-6, rep.residuals
            assert abs(rep.alpha_boundary - alpha_from_threshold(l, gamma, gl)) < 1e-8


def test_outputs(tmp_path, unit):
    fns, st = unit
    f, rep = eigenmode(3, 2, 0.02, solve_mode(3, st, fns), st, fns, n_radii=33)
    data = json.loads(write_eigenmode_json(f, rep, tmp_path / "e.json").read_text())
    assert set(data) == {"l", "m", "gamma", "A1", "C1_tilde", "B1", "residuals"}
    assert data["A1"] == f.A1
    lines = write_fields_csv(f, tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "r,P_lm,v_lm,w_lm,x_lm,H_l1,H_l2"
    assert len(lines) == 34
