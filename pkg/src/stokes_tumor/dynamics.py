"""Linearised boundary evolution as a diagonal flow on spherical-harmonic coefficients.

The linearised operator multiplies every degree-``l`` coefficient by
``alpha_l(gamma)``, so ``c_lm(t) = c_lm(0) exp(alpha_l t)`` exactly.  Rates are
measured in the weighted proxy norm ``(sum (1+l)^(2s) c_lm^2)^(1/2)``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericalError, SaturationError
from .harmonics import analyze, degree_of_index, gauss_grid, index, n_coeffs, synthesize
from .spectrum import SpectrumReport

__all__ = [
    "PerturbationState",
    "DynamicsTrajectory",
    "BoundarySnapshot",
    "single_mode",
    "random_state",
    "evolve",
    "proxy_norm",
    "band_mask",
    "measured_rate",
    "rate_horizon",
    "sample_trajectory",
    "boundary_snapshot",
    "recover_coeffs",
    "write_trajectory_csv",
    "write_snapshot_csv",
]

SOBOLEV_S = 2
SMALLNESS = 0.3


@dataclass(frozen=True)
class PerturbationState:
    """Boundary perturbation ``eta = sum c_lm Y_lm`` at time ``t``."""

    L_max: int
    coeffs: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (n_coeffs(self.L_max),):
            raise ValueError(f"expected {n_coeffs(self.L_max)} coefficients for L_max={self.L_max}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def degrees(self) -> np.ndarray:
        return degree_of_index(self.L_max)

    def __add__(self, other: "PerturbationState") -> "PerturbationState":
        self._check_compatible(other)
        return PerturbationState(self.L_max, self.coeffs + other.coeffs, self.t)

    def scaled(self, a: float) -> "PerturbationState":
        return PerturbationState(self.L_max, a * self.coeffs, self.t)

    def _check_compatible(self, other):
        if other.L_max != self.L_max or other.t != self.t:
            raise ValueError("states must share L_max and time")


def single_mode(L_max: int, l: int, m: int, amplitude: float = 1.0) -> PerturbationState:
    c = np.zeros(n_coeffs(L_max))
    c[index(l, m)] = amplitude
    return PerturbationState(L_max, c)


def random_state(L_max: int, seed: int, band: tuple[int, int] | None = None, decay: float = 3.0) -> PerturbationState:
    """Gaussian coefficients scaled by ``(1+l)^(-decay)`` inside ``band`` (inclusive)."""
    rng = np.random.default_rng(seed)
    deg = degree_of_index(L_max)
    c = rng.standard_normal(deg.shape) * (1.0 + deg) ** (-decay)
    if band is not None:
        c[~band_mask(L_max, band)] = 0.0
    return PerturbationState(L_max, c)


def _multipliers(report: SpectrumReport, gamma: float, L_max: int) -> np.ndarray:
    if L_max > report.L_max:
        raise ValueError(f"spectrum covers l <= {report.L_max}, state needs {L_max}")
    return report.multipliers(gamma)[: L_max + 1]


def evolve(state: PerturbationState, spectrum: SpectrumReport, gamma: float, dt: float) -> PerturbationState:
    """Advance by ``dt`` with the exact per-degree exponential.

    Raises
    ------
    SaturationError
        If a coefficient leaves double range; ``degrees`` lists the culprits.
    """
    rates = _multipliers(spectrum, gamma, state.L_max)[state.degrees]
    with np.errstate(over="ignore", invalid="ignore"):
        new = np.where(state.coeffs == 0.0, 0.0, state.coeffs * np.exp(rates * dt))
    bad = ~np.isfinite(new)
    if np.any(bad):
        degrees = sorted(set(int(l) for l in state.degrees[bad]))
        raise SaturationError(f"coefficients overflow at t={state.t + dt:g} for degrees {degrees}", degrees=degrees)
    return PerturbationState(state.L_max, new, state.t + dt)


def band_mask(L_max: int, band: tuple[int, int | None] | None) -> np.ndarray:
    deg = degree_of_index(L_max)
    if band is None:
        return np.ones(deg.shape, dtype=bool)
    lo, hi = band
    hi = L_max if hi is None else hi
    return (deg >= lo) & (deg <= hi)


def proxy_norm(state: PerturbationState, s: int = SOBOLEV_S, band: tuple[int, int | None] | None = None) -> float:
    """Weighted norm ``(sum (1+l)^(2s) c_lm^2)^(1/2)`` over degrees in ``band``."""
    mask = band_mask(state.L_max, band)
    x = (1.0 + state.degrees[mask]) ** s * state.coeffs[mask]
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if scale == 0.0 or not math.isfinite(scale):
        return scale
    # scaled so large growing coefficients do not overflow when squared
    return scale * float(np.linalg.norm(x / scale))


def measured_rate(times, norms) -> float:
    """Least-squares slope of ``log(norm)`` against ``t``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if t.shape != y.shape or t.size < 10:
        raise ValueError("need at least 10 paired samples")
    if not np.all(y > 0):
        raise NumericalError("rate undefined: the band norm is not positive at every sample")
    slope, _ = np.polyfit(t, np.log(y), 1)
    return float(slope)


def rate_horizon(
    report: SpectrumReport,
    gamma: float,
    L_max: int,
    band=(2, None),
    decades: float = 8.0,
    max_growth: float = 600.0,
) -> float:
    """Time after which the leading degree dominates the band by ``10**decades`` in energy.

    Uses the gap between the two largest distinct multipliers in ``band``.
    For growing data the horizon is capped where the leading mode has grown
    by ``exp(max_growth)``, which keeps coefficients inside double range.
    """
    lo, hi = band
    hi = L_max if hi is None else hi
    a = np.unique(_multipliers(report, gamma, L_max)[lo: hi + 1])[::-1]
    if a.size < 2:
        return 1.0
    gap = a[0] - a[1]
    horizon = decades * math.log(10.0) / (2.0 * gap)
    if a[0] > 0:
        horizon = min(horizon, max_growth / a[0])
    return horizon


@dataclass(frozen=True)
class DynamicsTrajectory:
    t: np.ndarray
    norm_total: np.ndarray
    norm_l_ge_2: np.ndarray
    rate_estimate: np.ndarray
    states: list = field(default_factory=list, repr=False)

    def rate(self, band_norms: str = "norm_l_ge_2", t_min: float = 0.0) -> float:
        sel = self.t >= t_min
        return measured_rate(self.t[sel], getattr(self, band_norms)[sel])


def sample_trajectory(
    state: PerturbationState,
    spectrum: SpectrumReport,
    gamma: float,
    t_end: float,
    n_samples: int = 101,
    keep_states: bool = False,
) -> DynamicsTrajectory:
    """Evaluate the exact flow on ``n_samples`` uniform times in ``[0, t_end]``.

    ``rate_estimate`` is the local slope of ``log norm_l_ge_2``.
    """
    times = np.linspace(0.0, t_end, n_samples)
    total, upper, kept = [], [], []
    for t in times:
        s = evolve(state, spectrum, gamma, t)
        total.append(proxy_norm(s))
        upper.append(proxy_norm(s, band=(2, None)))
        if keep_states:
            kept.append(s)
    total = np.array(total)
    upper = np.array(upper)
    if n_samples >= 2 and np.all(upper > 0):
        local = np.gradient(np.log(upper), times)
    else:
        local = np.full(times.shape, np.nan)
    return DynamicsTrajectory(times + state.t, total, upper, local, kept)


@dataclass(frozen=True)
class BoundarySnapshot:
    theta: np.ndarray
    phi: np.ndarray
    radius: np.ndarray
    weights: np.ndarray


def boundary_snapshot(state: PerturbationState, epsilon: float, n_theta: int = 64, n_phi: int = 128) -> BoundarySnapshot:
    """Radii ``1 + epsilon * eta`` on a Gauss-Legendre by uniform-longitude grid."""
    theta, phi, weights = gauss_grid(n_theta, n_phi)
    eta = synthesize(state.coeffs, state.L_max, theta, phi)
    amplitude = abs(epsilon) * float(np.max(np.abs(eta))) if eta.size else 0.0
    if amplitude > SMALLNESS:
        warnings.warn(f"epsilon * max|eta| = {amplitude:.3g} exceeds {SMALLNESS}; outside the small-perturbation regime",
                      RuntimeWarning, stacklevel=2)
    return BoundarySnapshot(theta, phi, 1.0 + epsilon * eta, weights)


def recover_coeffs(snapshot: BoundarySnapshot, epsilon: float, L_max: int) -> np.ndarray:
    """Analyse a snapshot back into coefficients of ``eta``."""
    eta = (snapshot.radius - 1.0) / epsilon
    return analyze(eta, L_max, snapshot.theta, snapshot.phi, snapshot.weights)


def write_trajectory_csv(traj: DynamicsTrajectory, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "norm_total", "norm_l_ge_2", "rate_estimate"])
        for row in zip(traj.t, traj.norm_total, traj.norm_l_ge_2, traj.rate_estimate):
            writer.writerow([f"{x:.17g}" for x in row])
    return path


def write_snapshot_csv(snap: BoundarySnapshot, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "phi", "radius"])
        for i, th in enumerate(snap.theta):
            for j, ph in enumerate(snap.phi):
                writer.writerow([f"{th:.17g}", f"{ph:.17g}", f"{snap.radius[i, j]:.17g}"])
    return path
