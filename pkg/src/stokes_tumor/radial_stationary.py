"""Radially symmetric stationary tumour: nutrient, velocity and pressure profiles.

The nutrient profile is found by shooting on the centre concentration,
integrating ``s'' + (2/r) s' = f(s)`` outward from a small radius seeded by
the regular power series.  The stationary radius is the zero of the mass
balance ``m(R) = int_0^R g(s) r^2 dr``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import BracketError, NumericalError, PostconditionError
from .kernels import RadialGrid, Tolerance, Trajectory, find_root, integrate_ivp
from .model import ModelFunctions

logger = logging.getLogger(__name__)

__all__ = [
    "SigmaProfile",
    "RadialStationary",
    "solve_sigma_profile",
    "mass_balance_residual",
    "find_stationary",
    "rescale_to_unit",
    "write_profile_csv",
]

R_START = 1e-6
DEFAULT_TOL = Tolerance(rel=1e-13, abs=1e-15)
LOG_C_MIN = math.log(1e-300)
_BLOWUP = 1e6


class _Blowup(Exception):
    pass


@dataclass(frozen=True)
class SigmaProfile:
    """Nutrient profile on ``[0, R]`` from one shooting solve.

    The trajectory state is ``(sigma, sigma', M)`` with
    ``M(r) = int_0^r g(sigma) s^2 ds``.
    """

    R: float
    sigma0: float
    r_start: float
    trajectory: Trajectory
    fns: ModelFunctions = field(repr=False)

    @property
    def sigma_prime_at_R(self) -> float:
        return float(self.trajectory.y_end[1])

    @property
    def mass(self) -> float:
        return float(self.trajectory.y_end[2])

    def state(self, r) -> np.ndarray:
        """``(sigma, sigma', M)`` at ``r``; the power series covers ``r < r_start``."""
        r = np.asarray(r, dtype=float)
        out = np.empty(r.shape + (3,))
        inner = r < self.r_start
        if np.any(~inner):
            out[~inner] = self.trajectory(r[~inner])
        if np.any(inner):
            out[inner] = _series(self.fns, self.sigma0, r[inner])
        return out


def _series(fns, c, r):
    fc = float(fns.f(c))
    gc = float(fns.g(c))
    r = np.asarray(r, dtype=float)
    return np.stack([c + fc * r**2 / 6, fc * r / 3, gc * r**3 / 3], axis=-1)


def _shoot(fns: ModelFunctions, R: float, c: float, tol: Tolerance, with_mass: bool):
    f, g = fns.f, fns.g
    r0 = min(R_START, 1e-3 * R)
    y0 = _series(fns, c, r0)
    if with_mass:
        def rhs(r, y):
            return np.array([y[1], f(y[0]) - 2 * y[1] / r, g(y[0]) * r * r])
    else:
        y0 = y0[:2]

        def rhs(r, y):
            if y[0] > _BLOWUP:
                raise _Blowup
            return np.array([y[1], f(y[0]) - 2 * y[1] / r])
    # absolute tolerance tracks the centre value so tiny profiles keep relative accuracy
    local = Tolerance(tol.rel, tol.abs * max(c, 1e-300))
    return r0, integrate_ivp(rhs, r0, R, y0, local)


def solve_sigma_profile(fns: ModelFunctions, R: float, tol: Tolerance = DEFAULT_TOL) -> SigmaProfile:
    """Solve ``s'' + (2/r) s' = f(s)``, ``s'(0) = 0``, ``s(R) = 1``.

    The centre value is found by Brent's method on ``log s(R)`` as a function
    of ``log s(0)`` over ``[log 1e-300, 0]``.
    """
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")

    def mismatch(log_c):
        try:
            _, tr = _shoot(fns, R, math.exp(log_c), tol, with_mass=False)
        except _Blowup:
            return math.log(_BLOWUP)
        end = tr.y_end[0]
        if not end > 0:
            return -1e3
        return math.log(end)

    lo, hi = LOG_C_MIN, 0.0
    m_lo, m_hi = mismatch(lo), mismatch(hi)
    if not (m_lo < 0 < m_hi):
        raise NumericalError(
            f"nutrient shooting bracket not found on centre values [1e-300, 1] at R={R}: "
            f"log s(R) = {m_lo:.3g}, {m_hi:.3g}")
    log_c = find_root(mismatch, lo, hi, Tolerance(rel=1e-16, abs=1e-15))
    c = math.exp(log_c)
    r0, tr = _shoot(fns, R, c, tol, with_mass=True)
    return SigmaProfile(R=float(R), sigma0=c, r_start=r0, trajectory=tr, fns=fns)


def mass_balance_residual(fns: ModelFunctions, R: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """``m(R) = int_0^R g(sigma_R(r)) r^2 dr`` for the nutrient profile on ``[0, R]``."""
    return solve_sigma_profile(fns, R, tol).mass


@dataclass(frozen=True)
class RadialStationary:
    """Tabulated stationary profiles with cubic Hermite interpolants."""

    R_s: float
    grid: RadialGrid
    sigma_s: np.ndarray
    sigma_s_prime: np.ndarray
    v_s: np.ndarray
    p_s: np.ndarray
    gamma: float
    sigma0: float
    roots: tuple = ()
    fns: ModelFunctions = field(default=None, repr=False, compare=False)

    @property
    def sigma_s_prime_at_R(self) -> float:
        return float(self.sigma_s_prime[-1])

    def __post_init__(self):
        fns = self.fns
        r = self.grid.nodes
        s, sp = self.sigma_s, self.sigma_s_prime
        with np.errstate(divide="ignore", invalid="ignore"):
            spp = np.where(r > 0, np.asarray(fns.f(s), float) - 2 * sp / r, float(fns.f(s[0])) / 3)
            vp = np.where(r > 0, np.asarray(fns.g(s), float) - 2 * self.v_s / r, float(fns.g(s[0])) / 3)
        pp = 4.0 / 3.0 * np.asarray(fns.g_prime(s), float) * sp
        object.__setattr__(self, "_sigma", CubicHermiteSpline(r, s, sp))
        object.__setattr__(self, "_sigma_prime", CubicHermiteSpline(r, sp, spp))
        object.__setattr__(self, "_v", CubicHermiteSpline(r, self.v_s, vp))
        object.__setattr__(self, "_p", CubicHermiteSpline(r, self.p_s, pp))

    def sigma(self, r):
        return self._sigma(r)

    def sigma_prime(self, r):
        return self._sigma_prime(r)

    def v(self, r):
        return self._v(r)

    def p(self, r):
        return self._p(r)

    def invariant_violations(self) -> list[str]:
        r = self.grid.nodes
        R = self.R_s
        out = []
        if not (np.all(self.sigma_s > 0) and np.all(self.sigma_s <= 1 + 1e-12)):
            out.append(f"sigma_s outside (0, 1]: range [{self.sigma_s.min():.3g}, {self.sigma_s.max():.3g}]")
        if abs(self.sigma_s[-1] - 1) > 1e-12:
            out.append(f"sigma_s(R_s) = {self.sigma_s[-1]!r} != 1")
        if np.any(self.sigma_s_prime < -1e-10):
            out.append(f"sigma_s' negative (min {self.sigma_s_prime.min():.3g})")
        if abs(self.v_s[0]) > 1e-8 or abs(self.v_s[-1]) > 1e-8:
            out.append(f"v_s endpoints not zero: v_s(0)={self.v_s[0]:.3g}, v_s(R_s)={self.v_s[-1]:.3g}")
        core = (r >= 0.05 * R) & (r <= 0.95 * R)
        if not np.all(self.v_s[core] < 0):
            out.append("v_s not strictly negative in the interior")
        target = self.gamma / R + 4.0 / 3.0 * float(self.fns.g(1.0))
        if abs(self.p_s[-1] - target) > 1e-8:
            out.append(f"p_s(R_s) = {self.p_s[-1]:.12g}, expected {target:.12g}")
        return out

    def check(self) -> "RadialStationary":
        bad = self.invariant_violations()
        if bad:
            raise PostconditionError("stationary solution invariants violated: " + "; ".join(bad))
        return self


def _tabulate(fns: ModelFunctions, prof: SigmaProfile, grid: RadialGrid, gamma: float, roots=()) -> RadialStationary:
    r = grid.nodes
    state = prof.state(r)
    sigma = state[:, 0].copy()
    sigma_p = state[:, 1].copy()
    mass = state[:, 2]
    sigma[-1] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(r > 0, mass / r**2, 0.0)
    p = gamma / grid.R + 4.0 / 3.0 * np.asarray(fns.g(sigma), dtype=float)
    return RadialStationary(grid.R, grid, sigma, sigma_p, v, p, float(gamma), prof.sigma0, tuple(roots), fns)


def find_stationary(
    fns: ModelFunctions,
    bracket: tuple[float, float] | None = None,
    gamma: float | None = None,
    n_nodes: int = 2049,
    n_scan: int = 24,
    tol: Tolerance = DEFAULT_TOL,
) -> RadialStationary:
    """Locate the stationary radius and tabulate the profiles.

    With ``bracket=None`` the search starts on ``[0.1, 20]`` and expands
    geometrically up to ``[1e-3, 1e3]``.  The bracket is scanned on a
    geometric grid; every sign change is refined.  When several roots are
    found the smallest is returned and all of them are listed in ``roots``.
    """
    gamma = fns.gamma if gamma is None else float(gamma)
    auto = bracket is None
    lo, hi = (0.1, 20.0) if auto else (float(bracket[0]), float(bracket[1]))
    if not 0 < lo < hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    scan_tol = Tolerance(1e-10, 1e-12)

    def m(R):
        return mass_balance_residual(fns, R, scan_tol) / R**3

    while True:
        radii = np.geomspace(lo, hi, n_scan)
        values = np.array([m(R) for R in radii])
        changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]
        if changes.size or not auto or (lo <= 1e-3 and hi >= 1e3):
            break
        lo, hi = max(lo / 10, 1e-3), min(hi * 10, 1e3)
    if not changes.size:
        raise BracketError(f"mass balance has no sign change on [{lo}, {hi}]")

    fine = lambda R: mass_balance_residual(fns, R, tol) / R**3
    roots = []
    for k in changes:
        a, b = radii[k], radii[k + 1]
        if values[k] == 0:
            roots.append(float(a))
            continue
        try:
            roots.append(find_root(fine, a, b, Tolerance(rel=1e-15, abs=1e-15)))
        except BracketError:
            # scan tolerance disagreed with the fine solve about a sign
            roots.append(find_root(m, a, b, Tolerance(rel=1e-15, abs=1e-15)))
    roots = sorted(set(roots))
    if len(roots) > 1:
        logger.warning("mass balance has %d roots on [%g, %g]: %s; returning the smallest",
                       len(roots), lo, hi, roots)
    R_s = roots[0]
    prof = solve_sigma_profile(fns, R_s, tol)
    st = _tabulate(fns, prof, RadialGrid.chebyshev(R_s, n_nodes), gamma, roots)
    if abs(prof.mass) >= 1e-9 * max(1.0, R_s**3):
        raise PostconditionError(f"mass balance residual {prof.mass:.3e} at R_s={R_s}")
    return st.check()


def rescale_to_unit(st: RadialStationary, fns: ModelFunctions | None = None):
    """Map the stationary tumour onto the unit ball.

    Returns ``(stationary, fns)`` where lengths are divided by ``R_s``,
    ``f`` and ``g`` are multiplied by ``R_s**2``, velocities by ``R_s`` (after
    the change of variable), pressures by ``R_s**2`` and ``gamma`` by ``R_s``.
    """
    fns = st.fns if fns is None else fns
    R = st.R_s
    if R == 1.0:
        return st, fns
    new_fns = fns.rescaled(R)
    grid = st.grid.scaled(1.0 / R)
    out = RadialStationary(
        R_s=1.0,
        grid=grid,
        sigma_s=st.sigma_s.copy(),
        sigma_s_prime=st.sigma_s_prime * R,
        v_s=st.v_s * R,
        p_s=st.p_s * R * R,
        gamma=st.gamma * R,
        sigma0=st.sigma0,
        roots=tuple(x / R for x in st.roots),
        fns=new_fns,
    )
    return out, new_fns


def write_profile_csv(st: RadialStationary, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "sigma_s", "v_s", "p_s"])
        for row in zip(st.grid.nodes, st.sigma_s, st.v_s, st.p_s):
            writer.writerow([f"{x:.17g}" for x in row])
    return path
