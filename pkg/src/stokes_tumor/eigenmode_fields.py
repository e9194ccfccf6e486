"""Interior fields of a single linearised harmonic and their residual checks.

For a boundary perturbation ``eta = Y_lm`` (``l >= 2``) the velocity is
expanded in vector spherical harmonics,

    u = v(r) V_lm + x(r) X_lm + w(r) W_lm,

with pressure ``psi = (4/3) G(r) Y_lm + P(r) Y_lm`` where
``G = g'(sigma_s) F_l``.  The radial factors are

    P = 2(2l+3) A1 r^l,          x = B1 r^l,
    v = kv 2l/(l+1) A1 r^(l+1) - vt(r),
    w = C1 r^(l-1) + kw (2l+3) A1 r^(l+1) - wt(r),

``kv = sqrt((l+1)/(2l+1))``, ``kw = sqrt(l/(2l+1))`` and particular parts

    vt = kv r G/(2l+3) + r^(-l-2)/(2l+3) int_0^r s^(l+3) S1 ds,
    wt = kw r G/(2l-1) + r^(l-1)/(2l-1) int_r^1 s^(2-l) S2 ds,

where ``S1 = kv(-G' + l G/r)`` and ``S2 = kw(G' + (l+1) G/r)`` are the
V and W components of ``grad(G Y_lm)``.  The constants follow from the two
traction conditions; ``B1`` is zero because the toroidal traction is
unforced.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericalError, TranslationModeError
from .harmonics import gauss_grid, real_sph_harm, surface_gradient
from .kernels import Tolerance, quad
from .mode_solver import ModeProfile
from .model import ModelFunctions
from .radial_stationary import RadialStationary
from .spectrum import alpha_from_threshold, gamma_threshold_l

__all__ = [
    "BoundaryData",
    "ModeConstants",
    "EigenmodeFields",
    "ResidualReport",
    "boundary_data",
    "solve_constants",
    "combination_closed_form",
    "assemble_fields",
    "residual_report",
    "write_fields_csv",
    "write_eigenmode_json",
]

FIELD_QUAD_TOL = Tolerance(rel=1e-12, abs=1e-14)


def _check_degree(l):
    if l == 1:
        raise TranslationModeError("degree 1 is the translation mode: alpha_1 = 0, no fields assembled")
    if l < 2 or int(l) != l:
        raise ValueError(f"eigenmode fields need an integer degree l >= 2, got {l!r}")


def _kv(l):
    return math.sqrt((l + 1) / (2 * l + 1))


def _kw(l):
    return math.sqrt(l / (2 * l + 1))


@dataclass(frozen=True)
class BoundaryData:
    """Particular-part values ``vt(1), wt(1), vt'(1), wt'(1)``."""

    v_tilde: float
    w_tilde: float
    v_tilde_prime: float
    w_tilde_prime: float


def boundary_data(l: int, mode: ModeProfile, st: RadialStationary, fns: ModelFunctions) -> BoundaryData:
    _check_degree(l)
    kv, kw = _kv(l), _kw(l)
    flux = float(fns.g_prime(1.0)) * st.sigma_s_prime_at_R
    I = mode.I_l
    return BoundaryData(
        v_tilde=kv * I,
        w_tilde=-kw * flux / (2 * l - 1),
        v_tilde_prime=-kv * flux - (l + 2) * kv * I,
        w_tilde_prime=kw * l / (2 * l - 1) * flux,
    )


@dataclass(frozen=True)
class ModeConstants:
    A1: float
    C1_tilde: float
    B1: float
    a_vec: tuple
    combination_residual: float

    def C1_of(self, l: int) -> float:
        return self.C1_tilde * math.sqrt(l * (2 * l + 1))


def _traction_rhs(l, gamma, bd: BoundaryData, g1, flux):
    """Right-hand sides of the two traction equations in ``(A1, C1_tilde)``."""
    kv, kw = _kv(l), _kw(l)
    r1 = kw * bd.w_tilde_prime - kv * bd.v_tilde_prime + gamma / 4 * (2 - l * l - l) + 2 * g1 - flux
    r2 = (kw * ((l - 1) / l * bd.w_tilde + bd.w_tilde_prime / l)
          - kv * ((l + 2) / (l + 1) * bd.v_tilde - bd.v_tilde_prime / (l + 1)) - 2 * g1)
    return r1, r2


def combination_closed_form(l: int, gamma: float, bd: BoundaryData, g1: float, flux: float) -> float:
    """``A1 + C1_tilde`` from the eliminated combination of the traction equations."""
    kv = _kv(l)
    s = math.sqrt(l * (2 * l + 1))
    inner = (gamma / 2 * (1 - l) * (2 * l * l + 5 * l + 2) - (4 * l + 2) * flux + (2 * l - 2) * g1
             + (4 * l * l + 5 * l + 3) / s * bd.w_tilde_prime - kv * (4 * l - 1) * bd.v_tilde_prime
             + 3 * (l * l - 1) / s * bd.w_tilde - 3 * (l + 2) * kv * bd.v_tilde)
    return inner / (2 * (l - 1) * (2 * l * l + 4 * l + 3))


def solve_constants(l: int, gamma: float, bd: BoundaryData, fns: ModelFunctions, st: RadialStationary) -> ModeConstants:
    """Solve the 2x2 traction system for ``(A1, C1_tilde)``; ``B1 = 0``, ``a = 0``."""
    _check_degree(l)
    g1 = float(fns.g(1.0))
    flux = float(fns.g_prime(1.0)) * st.sigma_s_prime_at_R
    M = np.array([[l * l - l, l * l - l - 3.0],
                  [2.0 * (l - 1), (2.0 * l * l + 4 * l) / (l + 1)]])
    rhs = np.array(_traction_rhs(l, gamma, bd, g1, flux))
    det = np.linalg.det(M)
    if abs(det) < 1e-12 * np.abs(M).max() ** 2:
        raise NumericalError(f"degenerate traction system at l={l} (det={det:.3e})")
    C1t, A1 = np.linalg.solve(M, rhs)
    combo = combination_closed_form(l, gamma, bd, g1, flux)
    resid = abs(A1 + C1t - combo)
    if resid > 1e-9 * max(1.0, abs(combo)):
        raise NumericalError(f"A1 + C1_tilde disagrees with the closed form at l={l}: {resid:.3e}")
    return ModeConstants(float(A1), float(C1t), 0.0, (0.0, 0.0, 0.0), float(resid))


class _Sources:
    """``G = g'(sigma_s) F_l`` and the V/W source components with derivatives."""

    def __init__(self, l, mode, st, fns):
        self.l, self.mode, self.st, self.fns = l, mode, st, fns
        self.kv, self.kw = _kv(l), _kw(l)

    def G(self, r):
        r = np.asarray(r, dtype=float)
        s = self.st.sigma(r)
        F, Fp = self.mode.evaluate(r)
        gp = np.asarray(self.fns.g_prime(s), dtype=float)
        g2 = np.asarray(self.fns.d2g(s), dtype=float)
        sp = self.st.sigma_prime(r)
        return gp * F, g2 * sp * F + gp * Fp

    def all(self, r):
        """Dict of G, G', G'', S1, S2, S1', S2' at ``r > 0``."""
        l = self.l
        st, fns = self.st, self.fns
        r = np.asarray(r, dtype=float)
        s = st.sigma(r)
        sp = st.sigma_prime(r)
        spp = np.asarray(fns.f(s), dtype=float) - 2 * sp / r
        F, Fp = self.mode.evaluate(r)
        Fpp = self.mode.second_derivative(r, st, fns)
        g1d = np.asarray(fns.g_prime(s), dtype=float)
        g2d = np.asarray(fns.d2g(s), dtype=float)
        g3d = np.asarray(fns.d3g(s), dtype=float)
        G = g1d * F
        Gp = g2d * sp * F + g1d * Fp
        Gpp = g3d * sp**2 * F + g2d * spp * F + 2 * g2d * sp * Fp + g1d * Fpp
        kv, kw = self.kv, self.kw
        return {
            "G": G, "Gp": Gp, "Gpp": Gpp,
            "S1": kv * (-Gp + l * G / r),
            "S2": kw * (Gp + (l + 1) * G / r),
            "S1p": kv * (-Gpp + l * Gp / r - l * G / r**2),
            "S2p": kw * (Gpp + (l + 1) * Gp / r - (l + 1) * G / r**2),
        }

    def S1(self, r):
        G, Gp = self.G(r)
        return self.kv * (-Gp + self.l * G / r)

    def S2(self, r):
        G, Gp = self.G(r)
        return self.kw * (Gp + (self.l + 1) * G / r)

    def inner_moment(self, r):
        """``r^(-l-2) int_0^r s^(l+3) S1 ds`` written as ``r^2 int_0^1 t^(l+3) S1(r t) dt``."""
        l = self.l
        if r == 0:
            return 0.0
        return r * r * quad(lambda t: t ** (l + 3) * self.S1(r * t), 0.0, 1.0, FIELD_QUAD_TOL)

    def outer_moment(self, r):
        """``r^(l-1) int_r^1 s^(2-l) S2 ds``."""
        l = self.l
        if r >= 1.0:
            return 0.0
        if r == 0:
            return 0.0
        return r ** (l - 1) * quad(lambda s: s ** (2 - l) * self.S2(s), r, 1.0, FIELD_QUAD_TOL)


@dataclass(frozen=True)
class EigenmodeFields:
    """Radial factors of one harmonic on a uniform collocation grid."""

    l: int
    m: int
    gamma: float
    A1: float
    C1_tilde: float
    B1: float
    a_vec: tuple
    r: np.ndarray
    P_lm: np.ndarray
    v_lm: np.ndarray
    x_lm: np.ndarray
    w_lm: np.ndarray
    v_tilde: np.ndarray
    w_tilde: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    H_l1: np.ndarray
    H_l2: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    derivatives: dict = field(repr=False)
    boundary: BoundaryData = None
    mode: ModeProfile = field(default=None, repr=False, compare=False)


def assemble_fields(
    l: int,
    m: int,
    gamma: float,
    constants: ModeConstants,
    mode: ModeProfile,
    st: RadialStationary,
    fns: ModelFunctions,
    n_radii: int = 257,
) -> EigenmodeFields:
    """Tabulate every radial factor (and first/second derivatives) on ``n_radii`` uniform radii."""
    _check_degree(l)
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (l={l}, m={m})")
    src = _Sources(l, mode, st, fns)
    kv, kw = src.kv, src.kw
    A1, C1t, B1 = constants.A1, constants.C1_tilde, constants.B1
    C1 = C1t * math.sqrt(l * (2 * l + 1))
    r = np.linspace(0.0, 1.0, n_radii)
    rp = r[1:]
    d = src.all(rp)
    J = np.array([src.inner_moment(x) for x in rp])
    K = np.array([src.outer_moment(x) for x in rp])
    G, Gp, Gpp = d["G"], d["Gp"], d["Gpp"]
    S1, S2, S1p, S2p = d["S1"], d["S2"], d["S1p"], d["S2p"]
    c1 = kv / (2 * l + 3)
    c2 = kw / (2 * l - 1)
    a1, b2 = 2 * l + 3, 2 * l - 1

    vt = c1 * rp * G + J / a1
    vt_p = c1 * (G + rp * Gp) + (-(l + 2) * J / rp + rp * S1) / a1
    vt_pp = (c1 * (2 * Gp + rp * Gpp)
             + ((l + 2) * (l + 3) * J / rp**2 - (l + 2) * S1 + S1 + rp * S1p) / a1)
    wt = c2 * rp * G + K / b2
    wt_p = c2 * (G + rp * Gp) + ((l - 1) * K / rp - rp * S2) / b2
    wt_pp = c2 * (2 * Gp + rp * Gpp) + ((l - 1) * (l - 2) * K / rp**2 - l * S2 - rp * S2p) / b2

    av = kv * 2 * l / (l + 1) * A1
    aw = kw * (2 * l + 3) * A1
    v = av * rp ** (l + 1) - vt
    v_p = av * (l + 1) * rp**l - vt_p
    v_pp = av * (l + 1) * l * rp ** (l - 1) - vt_pp
    w = C1 * rp ** (l - 1) + aw * rp ** (l + 1) - wt
    w_p = C1 * (l - 1) * rp ** (l - 2) + aw * (l + 1) * rp**l - wt_p
    w_pp = C1 * (l - 1) * (l - 2) * rp ** (l - 3) + aw * (l + 1) * l * rp ** (l - 1) - wt_pp
    x = B1 * rp**l
    x_p = B1 * l * rp ** (l - 1)
    x_pp = B1 * l * (l - 1) * rp ** (l - 2)
    Pc = 2 * (2 * l + 3) * A1
    P = Pc * rp**l
    P_p = Pc * l * rp ** (l - 1)
    P_pp = Pc * l * (l - 1) * rp ** (l - 2)

    def pad(a, origin=0.0):
        return np.concatenate([[origin], a])

    H1 = -kv * v + kw * w
    H2 = v / math.sqrt((l + 1) * (2 * l + 1)) + w / math.sqrt(l * (2 * l + 1))
    F0, _ = mode.evaluate(np.array([0.0]))
    phi = pad(mode.evaluate(rp)[0], float(F0[0]))
    G0 = float(fns.g_prime(st.sigma0)) * float(F0[0])
    psi = pad(4.0 / 3.0 * G + P, 4.0 / 3.0 * G0)

    derivs = {
        "v": v, "v_p": v_p, "v_pp": v_pp,
        "w": w, "w_p": w_p, "w_pp": w_pp,
        "x": x, "x_p": x_p, "x_pp": x_pp,
        "P": P, "P_p": P_p, "P_pp": P_pp,
        "G": G, "S1": S1, "S2": S2,
    }
    return EigenmodeFields(
        l=l, m=m, gamma=float(gamma), A1=A1, C1_tilde=C1t, B1=B1, a_vec=tuple(constants.a_vec), r=r,
        P_lm=pad(P), v_lm=pad(v), x_lm=pad(x), w_lm=pad(w), v_tilde=pad(vt), w_tilde=pad(wt),
        F1=pad(S1), F2=pad(S2), H_l1=pad(H1), H_l2=pad(H2), phi=phi, psi=psi, derivatives=derivs,
        boundary=boundary_data(l, mode, st, fns), mode=mode,
    )


@dataclass
class ResidualReport:
    residuals: dict
    alpha_direct: float
    alpha_boundary: float

    def max_residual(self, exclude=("multiplier",)) -> float:
        return max(v for k, v in self.residuals.items() if k not in exclude)

    def passed(self, tol: float = 1e-6, multiplier_tol: float = 1e-8) -> bool:
        return self.max_residual() < tol and self.residuals["multiplier"] < multiplier_tol


def _L(k, u, up, upp, r):
    return upp + 2 * up / r - k * (k + 1) * u / r**2


def _angular_moments(l, m, n_theta=32, n_phi=64):
    theta, phi, weights = gauss_grid(max(n_theta, l + 4), max(n_phi, 2 * l + 8))
    T, PH = np.meshgrid(theta, phi, indexing="ij")
    Y = real_sph_harm(l, m, T, PH)
    st, ct = np.sin(T), np.cos(T)
    omega = np.stack([st * np.cos(PH), st * np.sin(PH), ct])
    grad = surface_gradient(l, m, T, PH)
    curl = np.cross(omega, grad, axis=0)
    w = weights[:, None]
    return (
        np.sum(Y * omega * w, axis=(1, 2)),
        np.sum(grad * w, axis=(1, 2)),
        np.sum(curl * w, axis=(1, 2)),
    )


def _radial_integral(values, r):
    from scipy.integrate import simpson

    return float(simpson(values, x=r))


def residual_report(
    fields: EigenmodeFields,
    st: RadialStationary,
    fns: ModelFunctions,
    gamma: float | None = None,
    alpha_l: float | None = None,
) -> ResidualReport:
    """Sup-norm residuals of every field equation and boundary condition.

    ``alpha_l`` defaults to the direct eigenvalue formula evaluated with this
    mode; the boundary-assembled multiplier is compared against it.
    """
    l = fields.l
    gamma = fields.gamma if gamma is None else gamma
    kv, kw = _kv(l), _kw(l)
    rp = fields.r[1:]
    d = fields.derivatives
    v, vp, vpp = d["v"], d["v_p"], d["v_pp"]
    w, wp, wpp = d["w"], d["w_p"], d["w_pp"]
    x, xp, xpp = d["x"], d["x_p"], d["x_pp"]
    P, Pp, Ppp = d["P"], d["P_p"], d["P_pp"]
    G, S1, S2 = d["G"], d["S1"], d["S2"]

    res = {}
    res["divergence"] = np.max(np.abs(kw * (wp - (l - 1) * w / rp) - kv * (vp + (l + 2) * v / rp) - G))
    res["momentum_V"] = np.max(np.abs(kv * (-Pp + l * P / rp) - _L(l + 1, v, vp, vpp, rp) + S1))
    res["momentum_X"] = np.max(np.abs(_L(l, x, xp, xpp, rp)))
    res["momentum_W"] = np.max(np.abs(kw * (Pp + (l + 1) * P / rp) - _L(l - 1, w, wp, wpp, rp) + S2))
    res["pressure_harmonic"] = np.max(np.abs(_L(l, P, Pp, Ppp, rp)))

    g1 = float(fns.g(1.0))
    flux = float(fns.g_prime(1.0)) * st.sigma_s_prime_at_R
    v1, v1p, w1, w1p = v[-1], vp[-1], w[-1], wp[-1]
    normal = (-kv * v1p + kw * w1p) - (gamma / 4 * (2 - l * l - l) + 2 * g1 - flux + (2 * l + 3) * fields.A1)
    tangential = ((-(l + 2) / math.sqrt(l + 1) * v1 + (l - 1) / math.sqrt(l) * w1) / math.sqrt(2 * l + 1)
                  + v1p / math.sqrt((l + 1) * (2 * l + 1)) + w1p / math.sqrt(l * (2 * l + 1)) + 2 * g1)
    res["traction_normal"] = abs(normal)
    res["traction_tangential"] = abs(tangential)
    res["traction_toroidal"] = abs(xp[-1] - x[-1])

    bd = fields.boundary
    vt, wt = fields.v_tilde[1:], fields.w_tilde[1:]
    res["boundary_data"] = max(abs(vt[-1] - bd.v_tilde), abs(wt[-1] - bd.w_tilde))

    MY, Mgrad, Mcurl = _angular_moments(l, fields.m)
    H1, H2 = fields.H_l1, fields.H_l2
    r = fields.r
    tor = fields.x_lm / math.sqrt(l * (l + 1))
    a = np.asarray(fields.a_vec, dtype=float)
    translation = (4 * math.pi / 3 * a + _radial_integral(r**2 * H1, r) * MY
                   + _radial_integral(r**2 * H2, r) * Mgrad + _radial_integral(r**2 * tor, r) * Mcurl)
    rotation = -_radial_integral(r**3 * H2, r) * Mcurl + _radial_integral(r**3 * tor, r) * Mgrad
    res["constraint_translation"] = float(np.linalg.norm(translation))
    res["constraint_rotation"] = float(np.linalg.norm(rotation))

    combo = combination_closed_form(l, gamma, bd, g1, flux)
    res["combination"] = abs(fields.A1 + fields.C1_tilde - combo)

    if alpha_l is None:
        alpha_l = alpha_from_threshold(l, gamma, gamma_threshold_l(l, fields.mode, fns))
    H1_at_1 = -kv * v1 + kw * w1
    alpha_boundary = g1 + H1_at_1
    alpha_constants = g1 + l * (fields.A1 + fields.C1_tilde) + kv * bd.v_tilde - kw * bd.w_tilde
    res["multiplier"] = max(abs(alpha_boundary - alpha_l), abs(alpha_constants - alpha_l))
    res = {k: float(v) for k, v in res.items()}
    return ResidualReport(res, float(alpha_l), float(alpha_boundary))


def eigenmode(l: int, m: int, gamma: float, mode: ModeProfile, st: RadialStationary, fns: ModelFunctions,
              n_radii: int = 257):
    """Boundary data, constants, fields and residuals in one call."""
    bd = boundary_data(l, mode, st, fns)
    consts = solve_constants(l, gamma, bd, fns, st)
    fields = assemble_fields(l, m, gamma, consts, mode, st, fns, n_radii)
    return fields, residual_report(fields, st, fns, gamma)


def write_fields_csv(fields: EigenmodeFields, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "P_lm", "v_lm", "w_lm", "x_lm", "H_l1", "H_l2"])
        for row in zip(fields.r, fields.P_lm, fields.v_lm, fields.w_lm, fields.x_lm, fields.H_l1, fields.H_l2):
            writer.writerow([f"{x:.17g}" for x in row])
    return path


def eigenmode_record(fields: EigenmodeFields, report: ResidualReport) -> dict:
    return {
        "l": fields.l,
        "m": fields.m,
        "gamma": fields.gamma,
        "A1": fields.A1,
        "C1_tilde": fields.C1_tilde,
        "B1": fields.B1,
        "residuals": dict(report.residuals),
    }


def write_eigenmode_json(fields: EigenmodeFields, report: ResidualReport, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(eigenmode_record(fields, report), indent=2) + "\n")
    return path
