"""Numerical primitives: adaptive Runge-Kutta integration, adaptive
Gauss-Kronrod quadrature, Brent root finding and modified spherical Bessel
functions.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BracketError, DomainError, NumericalError, RangeError, StepSizeError

__all__ = [
    "Tolerance",
    "RadialGrid",
    "Trajectory",
    "integrate_ivp",
    "quad",
    "quad_with_error",
    "find_root",
    "bessel_i_spherical",
]


@dataclass(frozen=True)
class Tolerance:
    """Relative/absolute tolerance pair."""

    rel: float = 1e-10
    abs: float = 1e-12

    def __post_init__(self):
        for name in ("rel", "abs"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"tolerance {name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radii on ``[0, R]`` ending exactly at ``R``."""

    nodes: np.ndarray
    R: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if nodes[0] < 0:
            raise ValueError("grid nodes must be nonnegative")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[-1] != self.R:
            raise ValueError("last grid node must equal R")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def chebyshev(cls, R: float, n: int = 2049) -> "RadialGrid":
        """Chebyshev-Lobatto nodes clustered at both ends of ``[0, R]``."""
        k = np.arange(n)
        nodes = 0.5 * R * (1.0 - np.cos(np.pi * k / (n - 1)))
        nodes[0] = 0.0
        nodes[-1] = R
        return cls(nodes, float(R))

    def scaled(self, factor: float) -> "RadialGrid":
        nodes = self.nodes * factor
        R = self.R * factor
        nodes[-1] = R
        return RadialGrid(nodes, R)

    def __len__(self):
        return self.nodes.size


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass(frozen=True)
class Trajectory:
    """Accepted steps of an integration with cubic Hermite dense output."""

    r: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    n_rejected: int = 0
    n_rhs: int = 0

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]

    @property
    def n_steps(self) -> int:
        return self.r.size - 1

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.r[0], self.r[-1]
        span = hi - lo
        if np.any(x < lo - 1e-12 * span) or np.any(x > hi + 1e-12 * span):
            raise ValueError(f"dense output requested outside [{lo}, {hi}]")
        i = np.clip(np.searchsorted(self.r, x, side="right") - 1, 0, self.r.size - 2)
        h = self.r[i + 1] - self.r[i]
        s = (x - self.r[i]) / h
        return x, i, h, s

    def __call__(self, x) -> np.ndarray:
        """State at ``x`` (scalar or array); trailing axis is the state index."""
        x, i, h, s = self._locate(x)
        s = s[..., None]
        h = h[..., None]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * self.y[i] + h10 * h * self.dy[i] + h01 * self.y[i + 1] + h11 * h * self.dy[i + 1]

    def derivative(self, x) -> np.ndarray:
        """Derivative of the dense interpolant at ``x``."""
        x, i, h, s = self._locate(x)
        s = s[..., None]
        h = h[..., None]
        d00 = 6 * s * (s - 1) / h
        d10 = (1 - s) * (1 - 3 * s)
        d01 = -d00
        d11 = s * (3 * s - 2)
        return d00 * self.y[i] + d10 * self.dy[i] + d01 * self.y[i + 1] + d11 * self.dy[i + 1]


def _rms_norm(x):
    return math.sqrt(float(np.dot(x, x)) / x.size)


def integrate_ivp(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    r0: float,
    r1: float,
    y0,
    tol: Tolerance = Tolerance(),
    h0: float | None = None,
    max_steps: int = 200_000,
) -> Trajectory:
    """Integrate ``y' = rhs(r, y)`` from ``r0`` to ``r1`` with Dormand-Prince 5(4).

    Raises
    ------
    StepSizeError
        If the step size falls below a few ulps of ``r``.
    DomainError
        If ``rhs`` returns a non-finite value.
    """
    if not r0 < r1:
        raise ValueError(f"need r0 < r1, got {r0} >= {r1}")
    y = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DomainError("non-finite initial state")
    n = y.size
    rtol, atol = tol.rel, tol.abs
    n_rhs = 0

    def F(r, yy):
        nonlocal n_rhs
        n_rhs += 1
        out = np.asarray(rhs(r, yy), dtype=float).ravel()
        if not np.all(np.isfinite(out)):
            raise DomainError(f"non-finite right-hand side at r={r!r}")
        return out

    f = F(r0, y)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = _rms_norm(y / scale)
        d1 = _rms_norm(f / scale)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h = min(h, r1 - r0)
        f1 = F(r0 + h, y + h * f)
        d2 = _rms_norm((f1 - f) / scale) / h
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        h = min(100 * h, h1)
    else:
        h = h0
    h = min(h, r1 - r0)

    rs = [r0]
    ys = [y.copy()]
    dys = [f.copy()]
    K = np.empty((7, n))
    r = r0
    rejected = 0
    steps = 0
    while r < r1:
        if steps >= max_steps:
            raise NumericalError(f"integrate_ivp exceeded {max_steps} steps at r={r}")
        h_min = 16 * np.spacing(max(abs(r), abs(r1)))
        if h < h_min:
            raise StepSizeError(f"step size underflow (h={h:.3e}) at r={r}: stiff or singular problem")
        last = r + h >= r1
        if last:
            h = r1 - r
        K[0] = f
        for s in range(1, 7):
            K[s] = F(r + _C[s] * h, y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_A[6] @ K[:6])
        err = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms_norm(err / scale)
        if err_norm <= 1.0:
            r = r1 if last else r + h
            y = y_new
            f = K[6].copy()
            rs.append(r)
            ys.append(y.copy())
            dys.append(f)
            steps += 1
            factor = 10.0 if err_norm == 0 else min(10.0, max(0.2, 0.9 * err_norm ** -0.2))
            h *= factor
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err_norm ** -0.2)
    return Trajectory(np.array(rs), np.array(ys), np.array(dys), rejected, n_rhs)


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (nonnegative half)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_X15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes of the nonnegative half
_W7 = np.zeros(15)
_W7[[1, 3, 5]] = _WG[:3]
_W7[[13, 11, 9]] = _WG[:3]
_W7[7] = _WG[3]


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = c + half * _X15
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise DomainError(f"non-finite integrand on [{a}, {b}]")
    k = half * float(_W15 @ fx)
    g = half * float(_W7 @ fx)
    return k, abs(k - g)


def quad_with_error(f, a: float, b: float, tol: Tolerance = Tolerance(), limit: int = 2000):
    """Globally adaptive Gauss-Kronrod 7/15 quadrature returning ``(value, error)``.

    ``f`` is called with an array of abscissae and should return an array of
    the same shape (a scalar return is broadcast).
    """
    if a > b:
        raise ValueError(f"need a <= b, got {a} > {b}")
    if a == b:
        return 0.0, 0.0
    abs_floor = max(tol.abs, 1e-15)
    k, e = _gk15(f, a, b)
    heap = [(-e, a, b, k)]
    total, err = k, e
    while err > max(abs_floor, tol.rel * abs(total)):
        if len(heap) >= limit:
            warnings.warn(f"quad: subdivision limit reached, error estimate {err:.2e}", RuntimeWarning)
            break
        neg_e, lo, hi, kk = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk15(f, lo, mid)
        k2, e2 = _gk15(f, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        total += k1 + k2 - kk
        err += e1 + e2 + neg_e
    # resum to shed accumulated update roundoff
    total = math.fsum(item[3] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return total, err


def quad(f, a: float, b: float, tol: Tolerance = Tolerance()) -> float:
    """Integral of ``f`` over ``[a, b]``; see :func:`quad_with_error`."""
    return quad_with_error(f, a, b, tol)[0]


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: Tolerance = Tolerance(rel=4e-16, abs=1e-14),
              maxiter: int = 200) -> float:
    """Brent's method on a sign-changing bracket ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise DomainError("non-finite function value at bracket end")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={fa:.3e}, f(hi)={fb:.3e}")
    c, fc = a, fa
    d = e = b - a
    for _ in range(maxiter):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        delta = 2 * tol.rel * abs(b) + 0.5 * tol.abs
        m = 0.5 * (c - b)
        if abs(m) <= delta or fb == 0.0:
            return b
        if abs(e) >= delta and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2 * m * s
                q = 1 - s
            else:
                q = fa / fc
                rr = fb / fc
                p = s * (2 * m * q * (q - rr) - (b - a) * (rr - 1))
                q = (q - 1) * (rr - 1) * (s - 1)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2 * p < min(3 * m * q - abs(delta * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b += d if abs(d) > delta else math.copysign(delta, m)
        fb = float(f(b))
        if not math.isfinite(fb):
            raise DomainError(f"non-finite function value at x={b}")
    raise NumericalError(f"find_root did not converge in {maxiter} iterations")


def bessel_i_spherical(l: int, x: float) -> float:
    """Modified spherical Bessel function of the first kind ``i_l(x)``.

    Power series for ``x < (l + 1) / 2``; otherwise Miller backward recurrence
    normalised by ``i_0(x) = sinh(x) / x``.
    """
    if l < 0 or int(l) != l:
        raise ValueError(f"degree must be a nonnegative integer, got {l!r}")
    l = int(l)
    x = float(x)
    if not (math.isfinite(x) and x >= 0):
        raise ValueError(f"argument must be finite and nonnegative, got {x!r}")
    if x == 0.0:
        return 1.0 if l == 0 else 0.0
    if x < 0.5 * (l + 1):
        # x^l / (2l+1)!! * sum_k (x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
        log_lead = l * math.log(x) - sum(math.log(2 * j + 1) for j in range(l + 1))
        if log_lead < -745:
            return 0.0
        z = 0.5 * x * x
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= z / (k * (2 * l + 2 * k + 1))
            total += term
            if term < 1e-17 * total:
                break
        return math.exp(log_lead) * total
    if x > 709.0:
        raise RangeError(f"i_{l}({x}) overflows double precision")
    i0 = math.sinh(x) / x
    if l == 0:
        return i0
    top = max(l, int(x)) + 30 + int(math.sqrt(40 * max(l, x)))
    nxt, cur = 0.0, 1e-300
    result = 0.0
    for n in range(top, 0, -1):
        # i_{n-1} = i_{n+1} + (2n+1)/x i_n
        prev = nxt + (2 * n + 1) / x * cur
        nxt, cur = cur, prev
        if n - 1 == l:
            result = cur
        if abs(cur) > 1e250:
            nxt *= 1e-250
            cur *= 1e-250
            result *= 1e-250
    return result * (i0 / cur)
