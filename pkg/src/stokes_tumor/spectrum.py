"""Eigenvalues of the linearised boundary operator and the surface-tension threshold.

For ``l >= 2`` the degree-``l`` eigenvalue is affine in the surface tension,

    alpha_l(gamma) = -l(l+2)(2l+1) / (4(2l^2+4l+3)) * (gamma - gamma_l),

and vanishes at the per-degree threshold

    gamma_l = 4(2l+3)(l+1) / (l(l+2)(2l+1)) * (g(1) + I_l).

Degree 0 contributes ``alpha_0 = g(1) + I_0`` and degree 1 the triple zero
eigenvalue of rigid translations.  The analogous porous-medium (Darcy)
thresholds use the same profiles with the constant weight ``g'(1)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import ContradictionError, TruncationError
from .mode_solver import ModeProfile, solve_mode
from .model import ModelFunctions
from .radial_stationary import RadialStationary

__all__ = [
    "TailCertificate",
    "ThresholdResult",
    "SpectrumReport",
    "Eigenvalue",
    "SpectrumClassification",
    "alpha_slope",
    "gamma_threshold_l",
    "darcy_gamma_l",
    "alpha",
    "alpha_from_threshold",
    "threshold",
    "compute_spectrum",
    "full_spectrum",
    "write_spectrum_csv",
    "spectrum_summary",
]

TIE_TOL = 1e-12
MARGINAL_BAND = 1e-10
CERTIFICATE_RUN = 8


def alpha_slope(l: int) -> float:
    """``d alpha_l / d gamma`` for ``l >= 2``."""
    return -l * (l + 2) * (2 * l + 1) / (4.0 * (2 * l * l + 4 * l + 3))


def _stokes_prefactor(l):
    return 4.0 * (2 * l + 3) * (l + 1) / (l * (l + 2) * (2 * l + 1))


def _darcy_prefactor(l):
    return 2.0 / (l * (l - 1) * (l + 2))


def gamma_threshold_l(l: int, mode: ModeProfile, fns: ModelFunctions) -> float:
    if l < 2:
        raise ValueError(f"per-degree thresholds start at l = 2, got {l}")
    if mode.l != l:
        raise ValueError(f"mode profile has degree {mode.l}, expected {l}")
    bracket = float(fns.g(1.0)) + mode.I_l
    if not bracket > 0:
        raise ContradictionError(
            f"g(1) + I_l = {bracket:.3e} <= 0 at l={l}; this is impossible for valid laws "
            "and points at an upstream numerical failure")
    return _stokes_prefactor(l) * bracket


def darcy_gamma_l(l: int, mode: ModeProfile, fns: ModelFunctions) -> float:
    if l < 2:
        raise ValueError(f"per-degree thresholds start at l = 2, got {l}")
    if mode.l != l:
        raise ValueError(f"mode profile has degree {mode.l}, expected {l}")
    return _darcy_prefactor(l) * (float(fns.g(1.0)) + float(fns.g_prime(1.0)) * mode.J_l)


def alpha_from_threshold(l: int, gamma: float, gamma_l: float) -> float:
    return alpha_slope(l) * (gamma - gamma_l)


@dataclass(frozen=True)
class TailCertificate:
    """Evidence that the maximum over computed degrees is the global maximum.

    ``l_bar`` is the start of the final strictly decreasing run of
    thresholds; the certificate holds when the run spans at least
    ``CERTIFICATE_RUN`` steps and the last threshold is below the maximum.
    """

    l_bar: int
    run_length: int
    satisfied: bool


@dataclass(frozen=True)
class ThresholdResult:
    gamma_star: float
    l_star: int
    tie: bool
    certificate: TailCertificate


def threshold(gamma_l: Mapping[int, float] | Iterable[float]) -> ThresholdResult:
    """Maximum of the per-degree thresholds with a tail certificate.

    Accepts a mapping ``l -> gamma_l`` or a sequence starting at ``l = 2``.
    Ties within ``1e-12`` go to the smaller degree and are flagged.
    """
    if isinstance(gamma_l, Mapping):
        degrees = sorted(gamma_l)
        values = np.array([gamma_l[l] for l in degrees], dtype=float)
    else:
        values = np.asarray(list(gamma_l), dtype=float)
        degrees = list(range(2, 2 + values.size))
    if values.size == 0:
        raise ValueError("no thresholds supplied")
    if degrees != list(range(degrees[0], degrees[0] + len(degrees))):
        raise ValueError("degrees must be consecutive")
    gamma_star = -math.inf
    k_star = 0
    # fixed-order scan keeps the result independent of how values were produced
    for k, value in enumerate(values):
        if value > gamma_star:
            gamma_star, k_star = float(value), k
    tie = bool(np.sum(np.abs(values - gamma_star) <= TIE_TOL) > 1)
    if tie:
        k_star = int(np.nonzero(np.abs(values - gamma_star) <= TIE_TOL)[0][0])
    k_bar = values.size - 1
    while k_bar > 0 and values[k_bar - 1] > values[k_bar]:
        k_bar -= 1
    run = values.size - 1 - k_bar
    ok = run >= CERTIFICATE_RUN and values[-1] < gamma_star
    return ThresholdResult(gamma_star, degrees[k_star], tie,
                           TailCertificate(degrees[k_bar], run, bool(ok)))


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalue data for degrees ``0..L_max``.

    Arrays indexed by degree hold ``nan`` at ``l = 0, 1`` where the
    per-degree thresholds are undefined.
    """

    alpha_0: float
    gamma_l: np.ndarray
    gamma_tilde_l: np.ndarray
    I_l: np.ndarray
    L_max: int
    gamma_star: float
    l_star: int
    tie: bool
    certificate: TailCertificate
    gamma_tilde_star: float
    l_tilde_star: int
    gamma: float | None = None
    modes: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(2, self.L_max + 1)

    @property
    def alpha_l(self) -> np.ndarray | None:
        """``alpha_l(gamma)`` for ``l = 2..L_max`` at the report's gamma."""
        if self.gamma is None:
            return None
        return self.alpha_at(self.gamma)

    def alpha_at(self, gamma: float) -> np.ndarray:
        ls = self.degrees
        slopes = -ls * (ls + 2) * (2 * ls + 1) / (4.0 * (2 * ls * ls + 4 * ls + 3))
        return slopes * (gamma - self.gamma_l[2:])

    def at_gamma(self, gamma: float) -> "SpectrumReport":
        return replace(self, gamma=float(gamma))

    def multipliers(self, gamma: float) -> np.ndarray:
        """Eigenvalue per degree ``0..L_max`` (``alpha_0``, 0, then ``alpha_l``)."""
        out = np.empty(self.L_max + 1)
        out[0] = self.alpha_0
        out[1] = 0.0
        out[2:] = self.alpha_at(gamma)
        return out

    def invariant_violations(self) -> list[str]:
        out = []
        g = self.gamma_l[2:]
        gt = self.gamma_tilde_l[2:]
        if not self.alpha_0 < 0:
            out.append(f"alpha_0 = {self.alpha_0} is not negative")
        if not np.all(g > 0):
            out.append("some gamma_l are not positive")
        if not np.all(gt < g):
            out.append("some Darcy thresholds are not below the Stokes thresholds")
        return out


def alpha(l: int, gamma: float, report: SpectrumReport) -> float:
    """Eigenvalue of degree ``l`` at surface tension ``gamma``."""
    if l < 0:
        raise ValueError("degree must be nonnegative")
    if l == 0:
        return report.alpha_0
    if l == 1:
        return 0.0
    if l > report.L_max:
        raise ValueError(f"degree {l} beyond the report truncation {report.L_max}")
    return alpha_from_threshold(l, gamma, float(report.gamma_l[l]))


def _build_report(modes: Mapping[int, ModeProfile], fns: ModelFunctions, L_max: int, gamma) -> SpectrumReport:
    g1 = float(fns.g(1.0))
    gam = np.full(L_max + 1, np.nan)
    gam_t = np.full(L_max + 1, np.nan)
    I = np.full(L_max + 1, np.nan)
    for l in range(0, L_max + 1):
        if l in modes:
            I[l] = modes[l].I_l
        if l >= 2:
            gam[l] = gamma_threshold_l(l, modes[l], fns)
            gam_t[l] = darcy_gamma_l(l, modes[l], fns)
    alpha_0 = g1 + modes[0].I_l
    res = threshold(gam[2:])
    res_t = threshold(gam_t[2:])
    return SpectrumReport(
        alpha_0=alpha_0, gamma_l=gam, gamma_tilde_l=gam_t, I_l=I, L_max=L_max,
        gamma_star=res.gamma_star, l_star=res.l_star, tie=res.tie, certificate=res.certificate,
        gamma_tilde_star=res_t.gamma_star, l_tilde_star=res_t.l_star,
        gamma=None if gamma is None else float(gamma), modes=dict(modes),
    )


def compute_spectrum(
    st: RadialStationary,
    fns: ModelFunctions,
    L_max: int = 64,
    gamma: float | None = None,
    cap: int = 512,
    map_fn: Callable = map,
    modes: Mapping[int, ModeProfile] | None = None,
) -> SpectrumReport:
    """Solve the degree problems for ``l = 0..L_max`` and assemble the report.

    ``L_max`` is doubled (up to ``cap``) until the tail certificate holds.
    ``map_fn`` may be an executor's ``map`` for parallel per-degree solves;
    the reduction order is fixed so results do not depend on it.
    """
    if L_max < 2:
        raise ValueError("L_max must be at least 2")
    modes = dict(modes or {})
    L = L_max
    while True:
        todo = [l for l in range(0, L + 1) if l not in modes]
        for l, mode in zip(todo, map_fn(lambda k: solve_mode(k, st, fns), todo)):
            modes[l] = mode
        report = _build_report({l: modes[l] for l in range(L + 1)}, fns, L, gamma)
        if report.certificate.satisfied:
            return report
        if L >= cap:
            raise TruncationError(
                f"no tail certificate up to L_max={L} (decreasing run {report.certificate.run_length})",
                partial=report)
        L = min(2 * L, cap)


@dataclass(frozen=True)
class Eigenvalue:
    value: float
    degree: int
    multiplicity: int


@dataclass(frozen=True)
class SpectrumClassification:
    gamma: float
    eigenvalues: list
    stable: bool | None
    marginal: bool

    @property
    def total_multiplicity(self) -> int:
        return sum(e.multiplicity for e in self.eigenvalues)


def full_spectrum(gamma: float, report: SpectrumReport) -> SpectrumClassification:
    """Eigenvalues with multiplicities for degrees ``0..L_max`` plus stability.

    Stable iff ``gamma > gamma_star``; within ``1e-10`` of ``gamma_star``
    the case is flagged marginal and left unclassified.
    """
    eig = [Eigenvalue(report.alpha_0, 0, 1), Eigenvalue(0.0, 1, 3)]
    values = report.alpha_at(gamma)
    for l, a in zip(report.degrees, values):
        eig.append(Eigenvalue(float(a), int(l), 2 * int(l) + 1))
    eig.sort(key=lambda e: (-e.value, e.degree))
    marginal = abs(gamma - report.gamma_star) <= MARGINAL_BAND
    if marginal:
        stable = None
    else:
        stable = bool(gamma > report.gamma_star and report.alpha_0 < 0)
    return SpectrumClassification(float(gamma), eig, stable, marginal)


def write_spectrum_csv(report: SpectrumReport, path, gamma: float | None = None) -> Path:
    """CSV ``l,gamma_l,alpha_l,gamma_tilde_l,multiplicity`` for ``l = 2..L_max``."""
    gamma = report.gamma if gamma is None else gamma
    alphas = report.alpha_at(gamma) if gamma is not None else [math.nan] * (report.L_max - 1)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "gamma_l", "alpha_l", "gamma_tilde_l", "multiplicity"])
        for l, a in zip(report.degrees, alphas):
            l = int(l)
            writer.writerow([l, f"{report.gamma_l[l]:.17g}", f"{a:.17g}",
                             f"{report.gamma_tilde_l[l]:.17g}", 2 * l + 1])
    return path


def spectrum_summary(report: SpectrumReport, gamma: float | None = None) -> dict:
    gamma = report.gamma if gamma is None else gamma
    stable = None if gamma is None else full_spectrum(gamma, report).stable
    return {
        "alpha_0": report.alpha_0,
        "gamma_star": report.gamma_star,
        "l_star": report.l_star,
        "gamma_tilde_star": report.gamma_tilde_star,
        "stable": stable,
    }


def write_summary_json(summary: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
