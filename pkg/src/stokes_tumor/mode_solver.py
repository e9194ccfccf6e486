"""Degree-l nutrient perturbation profiles on the unit stationary ball.

``F_l`` solves ``F'' + (2/r) F' - l(l+1)/r^2 F = f'(sigma_s) F`` with ``F``
regular at the origin and ``F(1) = -sigma_s'(1)``.  The equation is linear
and homogeneous, so a single regular solution is integrated from a small
radius and rescaled to meet the boundary value.

Two integration forms are used:

* direct: ``u = F / r0**l`` and ``u'`` are integrated as they stand;
* log-derivative: ``u = r**l exp(q)`` with ``z = q'`` obeying the Riccati
  equation ``z' = -z**2 - 2(l+1) z / r + f'(sigma_s)``.  This never
  under- or overflows, needs far fewer steps, and is the default.

The direct form is kept as an independent check and refuses degrees whose
seed ``r0**l`` would leave double range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeOverflowError, NumericalError
from .kernels import Tolerance, Trajectory, integrate_ivp, quad
from .model import ModelFunctions
from .radial_stationary import RadialStationary

__all__ = ["ModeProfile", "solve_mode", "start_radius", "uses_riccati"]

MODE_TOL = Tolerance(rel=1e-12, abs=1e-300)
MOMENT_TOL = Tolerance(rel=1e-12, abs=1e-11)


def start_radius(l: int) -> float:
    return max(1e-6, 1e-3 / (l + 1))


def uses_riccati(l: int) -> bool:
    # r0**l below ~1e-200 puts the direct seed near underflow
    return l * -math.log10(start_radius(l)) > 200


@dataclass(frozen=True)
class ModeProfile:
    """Solution ``F_l`` tabulated on the stationary grid plus its moments.

    ``I_l = int_0^1 g'(sigma_s) F_l r^(l+2) dr`` and
    ``J_l = int_0^1 F_l r^(l+2) dr``.
    """

    l: int
    r: np.ndarray
    F_l: np.ndarray
    F_l_prime: np.ndarray
    I_l: float
    J_l: float
    F_l_prime_at_1: float
    method: str
    _eval: object = field(repr=False, compare=False)

    def evaluate(self, r):
        """``(F_l, F_l')`` at arbitrary radii in ``[0, 1]``."""
        return self._eval(np.asarray(r, dtype=float))

    def second_derivative(self, r, st: RadialStationary, fns: ModelFunctions):
        """``F_l''`` from the differential equation (requires ``r > 0``)."""
        r = np.asarray(r, dtype=float)
        F, Fp = self.evaluate(r)
        fp = np.asarray(fns.f_prime(st.sigma(r)), dtype=float)
        return -2 * Fp / r + (self.l * (self.l + 1) / r**2 + fp) * F

    def invariant_violations(self, st: RadialStationary) -> list[str]:
        out = []
        sp1 = st.sigma_s_prime_at_R
        if abs(self.F_l[-1] + sp1) > 1e-8:
            out.append(f"F_l(1) = {self.F_l[-1]!r} differs from -sigma_s'(1) = {-sp1!r}")
        interior = slice(1, -1)
        F = self.F_l[interior]
        sp = st.sigma_s_prime[interior]
        r = self.r[interior]
        if self.l >= 2:
            # values that underflowed to zero are exempt from the strict sign
            tiny = self.l * np.log(r) < math.log(1e-290)
            if not np.all((F < 0) | (tiny & (F == 0))):
                out.append("F_l not negative at interior nodes")
            if not np.all(F > -sp):
                out.append("F_l not above -sigma_s' at interior nodes")
        elif self.l == 0:
            if not np.all(F <= -sp + 1e-10):
                out.append("F_0 exceeds -sigma_s' at interior nodes")
        return out


def _direct(l, st, fns, tol):
    r0 = start_radius(l)
    k = float(fns.f_prime(st.sigma0))
    a = k / (4 * l + 6)
    fprime = fns.f_prime
    sigma = st.sigma
    ll = l * (l + 1)

    def rhs(r, y):
        return np.array([y[1], -2 * y[1] / r + (ll / (r * r) + fprime(sigma(r))) * y[0]])

    # u / r0**l so the seed is O(1)
    y0 = [1 + a * r0**2, l / r0 * (1 + a * r0**2) + 2 * a * r0]
    tr = integrate_ivp(rhs, r0, 1.0, y0, tol)
    u1 = float(tr.y_end[0])
    if not (math.isfinite(u1) and u1 > 0):
        raise DegreeOverflowError(f"direct integration failed for l={l}", largest_stable_l=l - 1)
    scale = -st.sigma_s_prime_at_R / u1

    def evaluate(r):
        r = np.asarray(r, dtype=float)
        F = np.empty(r.shape)
        Fp = np.empty(r.shape)
        outer = r >= r0
        if np.any(outer):
            y = tr(r[outer])
            F[outer] = scale * y[..., 0]
            Fp[outer] = scale * y[..., 1]
        inner = ~outer
        if np.any(inner):
            ri = r[inner]
            with np.errstate(divide="ignore", invalid="ignore"):
                base = (ri / r0) ** l
                F[inner] = scale * base * (1 + a * ri**2)
                dbase = np.where(ri > 0, l * base / np.where(ri > 0, ri, 1.0), 1.0 / r0 if l == 1 else 0.0)
            Fp[inner] = scale * (dbase * (1 + a * ri**2) + base * 2 * a * ri)
        return F, Fp

    return evaluate, tr, scale * u1


def _riccati(l, st, fns, tol):
    r0 = start_radius(l)
    k = float(fns.f_prime(st.sigma0))
    fprime = fns.f_prime
    sigma = st.sigma
    c = 2 * (l + 1)

    def rhs(r, y):
        z = y[1]
        return np.array([z, -z * z - c * z / r + fprime(sigma(r))])

    y0 = [k * r0**2 / (2 * (2 * l + 3)), k * r0 / (2 * l + 3)]
    tr = integrate_ivp(rhs, r0, 1.0, y0, Tolerance(tol.rel, 1e-14))
    q1 = float(tr.y_end[0])
    amp = -st.sigma_s_prime_at_R

    def evaluate(r):
        r = np.asarray(r, dtype=float)
        q = np.empty(r.shape)
        z = np.empty(r.shape)
        outer = r >= r0
        if np.any(outer):
            y = tr(r[outer])
            q[outer] = y[..., 0]
            z[outer] = y[..., 1]
        inner = ~outer
        if np.any(inner):
            ri = r[inner]
            q[inner] = k * ri**2 / (2 * (2 * l + 3))
            z[inner] = k * ri / (2 * l + 3)
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.log(r)
            F = amp * np.exp(l * logr + q - q1)
            F = np.where(r > 0, F, amp * math.exp(-q1) if l == 0 else 0.0)
            # F' = F (l/r + z), written to stay finite at r = 0
            Fp = np.where(r > 0, amp * (l * np.exp((l - 1) * logr + q - q1) + np.exp(l * logr + q - q1) * z), 0.0)
        if l == 1:
            Fp = np.where(r > 0, Fp, amp * math.exp(-q1))
        return F, Fp

    return evaluate, tr, amp


def solve_mode(
    l: int,
    st: RadialStationary,
    fns: ModelFunctions,
    method: str = "riccati",
    tol: Tolerance = MODE_TOL,
) -> ModeProfile:
    """Solve the degree-``l`` nutrient perturbation problem on the unit ball.

    ``method`` is ``"riccati"`` (default) or ``"direct"``.
    """
    if l < 0 or int(l) != l:
        raise ValueError(f"degree must be a nonnegative integer, got {l!r}")
    l = int(l)
    if abs(st.R_s - 1.0) > 1e-12:
        raise ValueError(f"mode solver needs the unit-radius stationary state (R_s = {st.R_s})")
    if method == "direct" and uses_riccati(l):
        raise DegreeOverflowError(
            f"direct form underflows at l={l}; use the log-derivative form",
            largest_stable_l=max(k for k in range(l) if not uses_riccati(k)))
    try:
        if method == "direct":
            evaluate, tr, F1 = _direct(l, st, fns, tol)
        elif method == "riccati":
            evaluate, tr, F1 = _riccati(l, st, fns, tol)
        else:
            raise ValueError(f"unknown method {method!r}")
    except NumericalError as exc:
        if isinstance(exc, DegreeOverflowError):
            raise
        raise DegreeOverflowError(f"mode integration failed at l={l}: {exc}", largest_stable_l=l - 1) from exc
    sp1 = st.sigma_s_prime_at_R
    if abs(F1 + sp1) >= 1e-12 * max(1.0, abs(sp1)):
        raise NumericalError(f"boundary value not met for l={l}: F(1) + sigma'(1) = {F1 + sp1:.3e}")

    # the stationary radius is 1 only to ~1e-12; the profile lives on [0, 1]
    r = np.minimum(st.grid.nodes, 1.0)
    F, Fp = evaluate(r)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(Fp))):
        raise DegreeOverflowError(f"non-finite profile for l={l}", largest_stable_l=l - 1)

    gprime = fns.g_prime
    sigma = st.sigma

    def weighted(x):
        return np.asarray(gprime(sigma(x)), dtype=float) * evaluate(x)[0] * x ** (l + 2)

    I_l = quad(weighted, 0.0, 1.0, MOMENT_TOL)
    J_l = quad(lambda x: evaluate(x)[0] * x ** (l + 2), 0.0, 1.0, MOMENT_TOL)
    return ModeProfile(l, r, F, Fp, I_l, J_l, float(Fp[-1]), method, evaluate)
