"""Constitutive laws for nutrient consumption and proliferation.

The canonical model is ``f(s) = lam * s`` and ``g(s) = mu * (s - sigma_c)``.
Concentrations are measured in units of the exterior nutrient level and
pressures in units of viscosity, so after :func:`canonical_model` the
exterior concentration and the viscosity are both 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import BracketError, ValidationError
from .kernels import Tolerance, find_root

__all__ = [
    "ModelParams",
    "ModelFunctions",
    "AssumptionReport",
    "canonical_model",
    "general_model",
    "validate_assumptions",
]

PARAM_KEYS = ("lambda", "mu", "sigma_c", "sigma_bar", "nu", "gamma")


@dataclass(frozen=True)
class ModelParams:
    """Dimensional constants of the canonical linear model."""

    lam: float
    mu: float
    sigma_c: float
    sigma_bar: float = 1.0
    nu: float = 1.0
    gamma: float = 0.0

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "ModelParams":
        missing = [k for k in PARAM_KEYS if k not in data]
        unknown = [k for k in data if k not in PARAM_KEYS]
        if missing or unknown:
            raise ValidationError(f"model config: missing keys {missing}, unknown keys {unknown}")
        values = {}
        for key in PARAM_KEYS:
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"model config: {key!r} must be a number, got {value!r}")
            values[key] = float(value)
        return cls(values["lambda"], values["mu"], values["sigma_c"], values["sigma_bar"],
                   values["nu"], values["gamma"])

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "sigma_c": self.sigma_c,
                "sigma_bar": self.sigma_bar, "nu": self.nu, "gamma": self.gamma}

    def violations(self) -> list[str]:
        out = []
        for name, value in (("lambda", self.lam), ("mu", self.mu), ("sigma_bar", self.sigma_bar), ("nu", self.nu)):
            if not (math.isfinite(value) and value > 0):
                out.append(f"{name} must be positive (got {value})")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            out.append(f"gamma must be nonnegative (got {self.gamma})")
        if not (math.isfinite(self.sigma_c) and self.sigma_c > 0):
            out.append(f"(A2) sigma_c must be positive (got {self.sigma_c})")
        elif math.isfinite(self.sigma_bar) and self.sigma_bar > 0 and not self.sigma_c < self.sigma_bar:
            out.append(f"(A3) sigma_c must be below sigma_bar (got sigma_c={self.sigma_c}, sigma_bar={self.sigma_bar})")
        return out


@dataclass(frozen=True)
class ModelFunctions:
    """Normalised laws consumed by every solver.

    ``g_second`` and ``g_third`` are only needed for reconstructing eigenmode
    fields; when absent they are obtained by central differences of
    ``g_prime``.
    """

    f: Callable
    f_prime: Callable
    g: Callable
    g_prime: Callable
    sigma_c: float
    gamma: float = 0.0
    g_second: Callable | None = None
    g_third: Callable | None = None
    params: ModelParams | None = field(default=None, compare=False)

    def d2g(self, s):
        if self.g_second is not None:
            return self.g_second(s)
        h = 1e-5
        return (self.g_prime(s + h) - self.g_prime(s - h)) / (2 * h)

    def d3g(self, s):
        if self.g_third is not None:
            return self.g_third(s)
        h = 1e-3
        return (self.g_prime(s + h) - 2 * self.g_prime(s) + self.g_prime(s - h)) / (h * h)

    def rescaled(self, length: float) -> "ModelFunctions":
        """Laws for the problem with lengths divided by ``length``.

        Consumption and proliferation pick up ``length**2`` and surface
        tension picks up ``length``; velocities scale by ``length`` and
        pressures by ``length**2``.
        """
        k = float(length) ** 2
        f, fp, g, gp = self.f, self.f_prime, self.g, self.g_prime
        g2 = self.g_second
        g3 = self.g_third
        params = self.params
        if params is not None:
            params = ModelParams(params.lam * k, params.mu * k, params.sigma_c, 1.0, 1.0, self.gamma * length)
        return ModelFunctions(
            f=lambda s: k * f(s),
            f_prime=lambda s: k * fp(s),
            g=lambda s: k * g(s),
            g_prime=lambda s: k * gp(s),
            sigma_c=self.sigma_c,
            gamma=self.gamma * float(length),
            g_second=None if g2 is None else (lambda s: k * g2(s)),
            g_third=None if g3 is None else (lambda s: k * g3(s)),
            params=params,
        )


def _const(value):
    return lambda s: value + 0.0 * np.asarray(s, dtype=float)


def canonical_model(params: ModelParams) -> ModelFunctions:
    """Normalised linear laws ``f = lam*s``, ``g = mu*(s - sigma_c)``.

    ``sigma_c`` is divided by ``sigma_bar`` and ``gamma`` by ``nu``.
    ``lam`` and ``mu`` are rates and are unaffected by the rescaling.
    """
    bad = params.violations()
    if bad:
        raise ValidationError("model parameters violate assumptions: " + "; ".join(bad), bad)
    lam, mu = params.lam, params.mu
    sc = params.sigma_c / params.sigma_bar
    gamma = params.gamma / params.nu
    normalised = ModelParams(lam, mu, sc, 1.0, 1.0, gamma)
    return ModelFunctions(
        f=lambda s: lam * s,
        f_prime=_const(lam),
        g=lambda s: mu * (s - sc),
        g_prime=_const(mu),
        sigma_c=sc,
        gamma=gamma,
        g_second=_const(0.0),
        g_third=_const(0.0),
        params=normalised,
    )


def general_model(f, g, f_prime=None, g_prime=None, sigma_c=None, gamma=0.0) -> ModelFunctions:
    """Wrap user-supplied laws; missing derivatives use central differences.

    If ``sigma_c`` is omitted it is located as the root of ``g``, searching
    ``[0, 1]`` first and then doubling the upper end up to ``2**10`` so that
    a root above 1 is still reported (and then fails (A3) on validation).
    """
    h = 1e-6
    if f_prime is None:
        f_prime = lambda s: (f(s + h) - f(s - h)) / (2 * h)
    if g_prime is None:
        g_prime = lambda s: (g(s + h) - g(s - h)) / (2 * h)
    if sigma_c is None:
        hi = 1.0
        while float(g(0.0)) * float(g(hi)) > 0 and hi < 2.0**10:
            hi *= 2
        try:
            sigma_c = find_root(lambda s: float(g(s)), 0.0, hi, Tolerance(rel=4e-16, abs=1e-15))
        except BracketError as exc:
            raise ValidationError(f"(A2) g has no root on [0, {hi:g}]", violations=["A2"]) from exc
    return ModelFunctions(f, f_prime, g, g_prime, float(sigma_c), float(gamma))


@dataclass
class AssumptionReport:
    """Pass/fail per assumption with a short reason for each failure."""

    results: dict[str, bool]
    messages: dict[str, list[str]]

    @property
    def ok(self) -> bool:
        return all(self.results.values())

    def failed(self) -> list[str]:
        return [name for name, passed in self.results.items() if not passed]

    def summary(self) -> str:
        if self.ok:
            return "assumptions (A1)-(A3) satisfied"
        parts = []
        for name in self.failed():
            parts.append(f"({name}) " + "; ".join(self.messages[name]))
        return "violated: " + " | ".join(parts)


def _sample(fn, grid):
    try:
        values = np.asarray(fn(grid), dtype=float)
        if values.shape == grid.shape:
            return values
    except Exception:
        pass
    return np.array([float(fn(float(s))) for s in grid])


def validate_assumptions(fns: ModelFunctions, sigma_max: float = 1.0, n: int = 1001) -> AssumptionReport:
    """Check the structural assumptions on a uniform sample of ``[0, sigma_max]``.

    (A1): ``f(0) = 0`` and ``f' > 0``; (A2): ``g' > 0`` and ``g(sigma_c) = 0``
    with ``sigma_c > 0``; (A3): ``sigma_c < 1``.
    """
    if sigma_max < 1:
        raise ValueError("sigma_max must be at least 1")
    grid = np.linspace(0.0, sigma_max, n)
    messages = {"A1": [], "A2": [], "A3": []}

    f0 = float(fns.f(0.0))
    if not abs(f0) < 1e-12:
        messages["A1"].append(f"f(0) = {f0:.3g} is not 0")
    fp = _sample(fns.f_prime, grid)
    if not np.all(fp > 1e-14):
        k = int(np.argmin(fp))
        messages["A1"].append(f"f' not positive at sigma = {grid[k]:.4g} (f' = {fp[k]:.3g})")

    gp = _sample(fns.g_prime, grid)
    if not np.all(gp > 1e-14):
        k = int(np.argmin(gp))
        messages["A2"].append(f"g' not positive at sigma = {grid[k]:.4g} (g' = {gp[k]:.3g})")
    if not fns.sigma_c > 0:
        messages["A2"].append(f"sigma_c = {fns.sigma_c:.6g} is not positive")
    gc = float(fns.g(fns.sigma_c))
    if not abs(gc) < 1e-10:
        messages["A2"].append(f"g(sigma_c) = {gc:.3g} is not 0")

    if not fns.sigma_c < 1:
        messages["A3"].append(f"sigma_c = {fns.sigma_c:.6g} is not below 1")

    return AssumptionReport({k: not v for k, v in messages.items()}, messages)
