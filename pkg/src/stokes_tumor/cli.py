"""Command-line front end.

Every command loads a strict JSON config, builds the stationary state,
rescales it to the unit ball and writes CSV/JSON artifacts to ``--out``.
All surface tensions and rates on the command line and in the output refer
to the unit-radius problem.

Exit status: 0 success, 2 invalid config or violated assumptions,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import dynamics, eigenmode_fields
from .errors import NumericalError, TranslationModeError, ValidationError
from .kernels import Tolerance
from .mode_solver import solve_mode
from .model import PARAM_KEYS, ModelParams, canonical_model, validate_assumptions
from .radial_stationary import DEFAULT_TOL, find_stationary, rescale_to_unit, write_profile_csv
from .spectrum import (
    compute_spectrum,
    full_spectrum,
    spectrum_summary,
    write_spectrum_csv,
    write_summary_json,
    _json_default,
)

log = logging.getLogger("stokes_tumor")

COMMANDS = ("stationary", "modes", "spectrum", "threshold", "eigenmode", "evolve", "compare-darcy")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_number = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": list(PARAM_KEYS),
            "properties": {k: _number for k in PARAM_KEYS},
        },
        "L_max": {"type": "integer", "minimum": 2},
        "gamma_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rel": {"type": "number", "exclusiveMinimum": 0},
                "abs": {"type": "number", "exclusiveMinimum": 0},
                "residual": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {"type": "string"},
        "seed": {"type": "integer"},
        "eigenmode": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "l": {"type": "integer", "minimum": 0},
                "m": {"type": "integer"},
                "n_radii": {"type": "integer", "minimum": 3},
            },
        },
        "evolve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "n_samples": {"type": "integer", "minimum": 10},
                "epsilon": {"type": "number"},
            },
        },
    },
}


@dataclass
class RunConfig:
    params: ModelParams
    L_max: int = 64
    gamma_values: list = field(default_factory=list)
    tol: Tolerance = DEFAULT_TOL
    residual_tol: float = 1e-6
    output: Path = Path("out")
    seed: int = 0
    eigen_l: int = 2
    eigen_m: int = 0
    n_radii: int = 257
    t_end: float | None = None
    n_samples: int = 201
    epsilon: float = 0.05
    jobs: int = 1

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ValidationError(f"config invalid at {where}: {exc.message}") from exc
        tol = data.get("tolerances", {})
        eig = data.get("eigenmode", {})
        evo = data.get("evolve", {})
        return cls(
            params=ModelParams.from_dict(data["model"]),
            L_max=data.get("L_max", 64),
            gamma_values=[float(g) for g in data.get("gamma_values", [])],
            tol=Tolerance(tol.get("rel", DEFAULT_TOL.rel), tol.get("abs", DEFAULT_TOL.abs)),
            residual_tol=tol.get("residual", 1e-6),
            output=Path(data.get("output", "out")),
            seed=data.get("seed", 0),
            eigen_l=eig.get("l", 2),
            eigen_m=eig.get("m", 0),
            n_radii=eig.get("n_radii", 257),
            t_end=evo.get("t_end"),
            n_samples=evo.get("n_samples", 201),
            epsilon=evo.get("epsilon", 0.05),
        )


def _fmt(x) -> str:
    if isinstance(x, (bool, type(None))) or isinstance(x, (int, np.integer)):
        return str(x)
    return f"{float(x):.17g}"


def _summary(**items) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in items.items())


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


class Pipeline:
    """Lazily built stationary state, modes and spectrum for one config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        fns = canonical_model(cfg.params)
        report = validate_assumptions(fns)
        if not report.ok:
            raise ValidationError("assumptions violated: " + "; ".join(report.failed()), violations=report.failed())
        self.fns_raw = fns
        self._st = None
        self._spectrum = None

    @property
    def stationary_raw(self):
        if self._st is None:
            st_raw = find_stationary(self.fns_raw, tol=self.cfg.tol)
            st, fns = rescale_to_unit(st_raw)
            self._st = (st_raw, st, fns)
        return self._st

    @property
    def st(self):
        return self.stationary_raw[1]

    @property
    def fns(self):
        return self.stationary_raw[2]

    def spectrum(self):
        if self._spectrum is None:
            if self.cfg.jobs > 1:
                with ThreadPoolExecutor(self.cfg.jobs) as pool:
                    self._spectrum = compute_spectrum(self.st, self.fns, self.cfg.L_max, map_fn=pool.map)
            else:
                self._spectrum = compute_spectrum(self.st, self.fns, self.cfg.L_max)
        return self._spectrum


def _require_gammas(cfg: RunConfig, command: str):
    if not cfg.gamma_values:
        raise ValidationError(f"{command} needs at least one surface tension (--gamma or gamma_values)")
    return cfg.gamma_values


def cmd_stationary(pipe: Pipeline, out: Path) -> str:
    st_raw, st, _ = pipe.stationary_raw
    write_profile_csv(st_raw, out / "profile.csv")
    _dump_json({
        "R_s": st_raw.R_s,
        "roots": list(st_raw.roots),
        "sigma0": st_raw.sigma0,
        "sigma_s_prime_at_R": st_raw.sigma_s_prime_at_R,
        "p_s_at_R": float(st_raw.p_s[-1]),
        "gamma": st_raw.gamma,
    }, out / "stationary.json")
    return _summary(R_s=st_raw.R_s, sigma0=st_raw.sigma0, n_roots=len(st_raw.roots))


def cmd_modes(pipe: Pipeline, out: Path) -> str:
    import csv

    st, fns = pipe.st, pipe.fns
    rows = []
    for l in range(pipe.cfg.L_max + 1):
        mode = solve_mode(l, st, fns)
        F0 = float(mode.evaluate(np.array([0.0]))[0][0])
        rows.append((l, mode.I_l, mode.J_l, F0, mode.F_l_prime_at_1))
    with (out / "modes.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "I_l", "J_l", "F_l_at_0", "F_l_prime_at_1"])
        for l, *vals in rows:
            writer.writerow([l] + [f"{v:.17g}" for v in vals])
    return _summary(L_max=pipe.cfg.L_max, I_0=rows[0][1], sigma_s_prime_at_1=st.sigma_s_prime_at_R)


def cmd_spectrum(pipe: Pipeline, out: Path) -> str:
    rep = pipe.spectrum()
    gammas = pipe.cfg.gamma_values
    first = gammas[0] if gammas else None
    write_spectrum_csv(rep, out / "spectrum.csv", first)
    summary = spectrum_summary(rep, first)
    if len(gammas) > 1:
        summary["sweep"] = []
        for k, g in enumerate(gammas):
            write_spectrum_csv(rep, out / f"spectrum_{k}.csv", g)
            summary["sweep"].append({"gamma": g, "stable": full_spectrum(g, rep).stable,
                                     "max_alpha": float(np.max(rep.multipliers(g)))})
    write_summary_json(summary, out / "summary.json")
    return _summary(gamma_star=rep.gamma_star, l_star=rep.l_star, stable=summary["stable"])


def cmd_threshold(pipe: Pipeline, out: Path) -> str:
    rep = pipe.spectrum()
    gammas = pipe.cfg.gamma_values
    stable = full_spectrum(gammas[0], rep).stable if gammas else None
    _dump_json({
        "gamma_star": rep.gamma_star,
        "l_star": rep.l_star,
        "tie": rep.tie,
        "alpha_0": rep.alpha_0,
        "L_max": rep.L_max,
        "certificate": {"l_bar": rep.certificate.l_bar, "run_length": rep.certificate.run_length,
                        "satisfied": rep.certificate.satisfied},
        "gamma_tilde_star": rep.gamma_tilde_star,
        "l_tilde_star": rep.l_tilde_star,
        "stable": stable,
    }, out / "threshold.json")
    return _summary(gamma_star=rep.gamma_star, l_star=rep.l_star, stable=stable)


def cmd_eigenmode(pipe: Pipeline, out: Path) -> str:
    cfg = pipe.cfg
    gammas = _require_gammas(cfg, "eigenmode")
    l, m = cfg.eigen_l, cfg.eigen_m
    if l < 2:
        raise ValidationError(f"eigenmode needs l >= 2 (got {l}); degree 1 is the translation mode with alpha_1 = 0")
    if abs(m) > l:
        raise ValidationError(f"eigenmode needs |m| <= l (got l={l}, m={m})")
    st, fns = pipe.st, pipe.fns
    mode = solve_mode(l, st, fns)
    worst = 0.0
    for k, g in enumerate(gammas):
        fields, report = eigenmode_fields.eigenmode(l, m, g, mode, st, fns, cfg.n_radii)
        tag = f"l{l}_m{m}_{k}"
        eigenmode_fields.write_fields_csv(fields, out / f"eigenmode_{tag}.csv")
        eigenmode_fields.write_eigenmode_json(fields, report, out / f"eigenmode_{tag}.json")
        worst = max(worst, report.max_residual())
        if not report.passed(cfg.residual_tol):
            raise NumericalError(f"eigenmode residual breach at gamma={g}: {report.residuals}")
    return _summary(l=l, m=m, max_residual=worst, alpha=report.alpha_direct)


def cmd_evolve(pipe: Pipeline, out: Path) -> str:
    cfg = pipe.cfg
    gammas = _require_gammas(cfg, "evolve")
    rep = pipe.spectrum()
    L = cfg.L_max
    state = dynamics.random_state(L, cfg.seed)
    snap0 = dynamics.boundary_snapshot(state, cfg.epsilon)
    dynamics.write_snapshot_csv(snap0, out / "snapshot_t0.csv")
    parts = []
    for k, g in enumerate(gammas):
        t_end = cfg.t_end if cfg.t_end is not None else dynamics.rate_horizon(rep, g, L)
        traj = dynamics.sample_trajectory(state, rep, g, t_end, cfg.n_samples)
        dynamics.write_trajectory_csv(traj, out / f"trajectory_{k}.csv")
        final = dynamics.evolve(state, rep, g, t_end)
        # keep the final shape at the initial amplitude so the snapshot stays in the small regime
        norm0, norm1 = dynamics.proxy_norm(state), dynamics.proxy_norm(final)
        shape = final.scaled(norm0 / norm1) if norm1 > 0 else final
        dynamics.write_snapshot_csv(dynamics.boundary_snapshot(shape, cfg.epsilon), out / f"snapshot_{k}.csv")
        predicted = float(np.max(rep.multipliers(g)[2:L + 1]))
        parts.append(_summary(gamma=g, measured_rate=traj.rate(), predicted_rate=predicted,
                              stable=full_spectrum(g, rep).stable))
    return " ; ".join(parts)


def cmd_compare_darcy(pipe: Pipeline, out: Path) -> str:
    import csv

    rep = pipe.spectrum()
    below = bool(np.all(rep.gamma_tilde_l[2:] < rep.gamma_l[2:]))
    with (out / "darcy.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "gamma_l", "gamma_tilde_l", "ratio"])
        for l in rep.degrees:
            l = int(l)
            writer.writerow([l, f"{rep.gamma_l[l]:.17g}", f"{rep.gamma_tilde_l[l]:.17g}",
                             f"{rep.gamma_tilde_l[l] / rep.gamma_l[l]:.17g}"])
    return _summary(gamma_star=rep.gamma_star, gamma_tilde_star=rep.gamma_tilde_star,
                    l_tilde_star=rep.l_tilde_star, darcy_below=below)


HANDLERS = {
    "stationary": cmd_stationary,
    "modes": cmd_modes,
    "spectrum": cmd_spectrum,
    "threshold": cmd_threshold,
    "eigenmode": cmd_eigenmode,
    "evolve": cmd_evolve,
    "compare-darcy": cmd_compare_darcy,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stokes-tumor", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides config 'output')")
    parser.add_argument("--l-max", type=int, dest="l_max", help="truncation degree (>= 2)")
    parser.add_argument("--gamma", type=float, action="append", help="surface tension; repeatable")
    parser.add_argument("--seed", type=int, help="seed for random initial data in 'evolve'")
    parser.add_argument("--jobs", type=int, default=1, help="threads for per-degree solves")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args) -> RunConfig:
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    cfg = RunConfig.from_json(data)
    if args.out is not None:
        cfg.output = args.out
    if args.l_max is not None:
        if args.l_max < 2:
            raise ValidationError("--l-max must be at least 2")
        cfg.L_max = args.l_max
    if args.gamma:
        if any(not (math.isfinite(g) and g >= 0) for g in args.gamma):
            raise ValidationError("--gamma values must be finite and nonnegative")
        cfg.gamma_values = list(args.gamma)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs < 1:
        raise ValidationError("--jobs must be positive")
    cfg.jobs = args.jobs
    return cfg


def run(command: str, cfg: RunConfig) -> tuple[int, str]:
    """Execute ``command``; returns ``(exit status, summary or error line)``."""
    try:
        pipe = Pipeline(cfg)
        cfg.output.mkdir(parents=True, exist_ok=True)
        return EXIT_OK, HANDLERS[command](pipe, cfg.output)
    except (ValidationError, TranslationModeError) as exc:
        return EXIT_CONFIG, f"error: {exc}"
    except NumericalError as exc:
        return EXIT_NUMERICAL, f"numerical failure: {exc}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status, line = run(args.command, cfg)
    print(line, file=sys.stdout if status == EXIT_OK else sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
