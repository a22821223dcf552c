"""Batch front end: TOML config, four subcommands, deterministic artifacts.

    solver run         --config cfg.toml [--out DIR] [--seed N]
    solver verify      --config cfg.toml [--out DIR]
    solver contraction --config cfg.toml [--out DIR] [--seed N]
    solver validate    --config cfg.toml [--out DIR] [--seed N]

Exit codes: 0 success, 1 configuration error, 2 solver failure.  Every
artifact embeds the sha256 of the config file (a comment line in CSVs,
a field in JSONs); identical config and seed give byte-identical
artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import diagnostics
from .ap_solver import (ApConfig, TimeWindow, Trajectory, solve_ap,
                        write_ledger_csv, write_trajectory_csv)
from .constitutive import (check_derivative_consistency, make_preset,
                           validate_assumptions)
from .errors import ConfigError, IngestionError, MoistsolveError
from .fixed_point import PicardConfig, estimate_contraction, march_windows
from .grid import Grid1D, GridFunction
from .pressure import PressureField, make_analytic_preset, read_tabulated_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


# ----------------------------------------------------------------------
# Config parsing
# ----------------------------------------------------------------------

_SCHEMA = {
    "material": {"preset", "overrides"},
    "pressure": {"preset", "csv", "amplitude", "omega", "slope"},
    "grid": {"n_cells"},
    "time": {"horizon", "dt"},
    "initial": {"kind", "value", "mean", "amplitude"},
    "picard": {"tol", "max_iter", "theta", "window_min", "initial_window"},
    "newton": {"tol", "max_iter", "line_search"},
    "run": {"seed", "out_dir"},
    "contraction": {"t1", "n_pairs", "halvings", "m_bound"},
    "verify": {"case", "spatial_cells", "spatial_dt", "spatial_horizon",
               "temporal_dts", "temporal_cells", "temporal_horizon"},
    "validate": {"n_samples", "n_random", "u_range"},
}

_MATERIAL_OVERRIDES = {"delta_psi", "c_psi", "delta_lam", "c_lam", "working_range"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration plus the config-file hash."""

    material_preset: str
    material_overrides: dict
    pressure_preset: str | None
    pressure_csv: str | None
    pressure_params: dict
    n_cells: int
    horizon: float
    dt: float
    initial_kind: str
    initial_params: dict
    picard: PicardConfig
    newton_tol: float
    newton_max_iter: int
    line_search: bool
    seed: int
    out_dir: str
    contraction: dict
    verify: dict
    validate: dict
    config_hash: str = field(repr=False, default="")
    source_path: str = field(repr=False, default="")


def _require_positive(name: str, value, integer=False):
    kind = int if integer else float
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if integer and not float(value) == v:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not v > 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")
    return v


def load_config(path) -> RunConfig:
    """Parse and validate a TOML config; unknown keys are rejected."""
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(raw_bytes.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    for section, table in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in table:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    material = raw.get("material", {})
    preset = material.get("preset", "synthetic-A")
    overrides = dict(material.get("overrides", {}))
    unknown = set(overrides) - _MATERIAL_OVERRIDES
    if unknown:
        raise ConfigError(f"unknown material overrides: {sorted(unknown)}")

    pressure = raw.get("pressure", {})
    p_preset = pressure.get("preset")
    p_csv = pressure.get("csv")
    if p_preset is not None and p_csv is not None:
        raise ConfigError("give either pressure.preset or pressure.csv, not both")
    if p_preset is None and p_csv is None:
        p_preset = "zero"
    p_params = {k: float(v) for k, v in pressure.items()
                if k in ("amplitude", "omega", "slope")}

    grid_tbl = raw.get("grid", {})
    n_cells = _require_positive("grid.n_cells", grid_tbl.get("n_cells", 64),
                                integer=True)
    if n_cells < 4:
        raise ConfigError(f"grid.n_cells must be at least 4, got {n_cells}")

    time_tbl = raw.get("time", {})
    horizon = _require_positive("time.horizon", time_tbl.get("horizon", 1.0))
    dt = _require_positive("time.dt", time_tbl.get("dt", 0.005))
    if dt > horizon:
        raise ConfigError(f"time.dt={dt:g} exceeds the horizon {horizon:g}")

    initial = raw.get("initial", {})
    kind = initial.get("kind", "cosine")
    if kind not in ("constant", "cosine"):
        raise ConfigError(f"initial.kind must be 'constant' or 'cosine', got {kind!r}")
    init_params = {}
    if kind == "constant":
        init_params["value"] = float(initial.get("value", 1.0))
    else:
        init_params["mean"] = float(initial.get("mean", 1.0))
        init_params["amplitude"] = float(initial.get("amplitude", 0.5))

    picard_tbl = raw.get("picard", {})
    picard = PicardConfig(
        picard_tol=_require_positive("picard.tol", picard_tbl.get("tol", 1e-8)),
        picard_max_iter=_require_positive("picard.max_iter",
                                          picard_tbl.get("max_iter", 60), integer=True),
        theta=float(picard_tbl.get("theta", 0.5)),
        window_min=_require_positive("picard.window_min",
                                     picard_tbl.get("window_min", dt)),
        initial_window=_require_positive("picard.initial_window",
                                         picard_tbl.get("initial_window",
                                                        min(0.1, horizon))),
    )

    newton_tbl = raw.get("newton", {})
    newton_tol = _require_positive("newton.tol", newton_tbl.get("tol", 1e-10))
    newton_max_iter = _require_positive("newton.max_iter",
                                        newton_tbl.get("max_iter", 50), integer=True)
    line_search = bool(newton_tbl.get("line_search", True))

    run_tbl = raw.get("run", {})
    seed = int(run_tbl.get("seed", 0))
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError(f"run.seed must fit in 64 bits, got {seed}")
    out_dir = str(run_tbl.get("out_dir", "out"))

    contraction = dict(raw.get("contraction", {}))
    if "t1" in contraction:
        _require_positive("contraction.t1", contraction["t1"])
    if "n_pairs" in contraction:
        _require_positive("contraction.n_pairs", contraction["n_pairs"], integer=True)
    if "halvings" in contraction and int(contraction["halvings"]) < 0:
        raise ConfigError("contraction.halvings must be nonnegative")

    verify = dict(raw.get("verify", {}))
    validate = dict(raw.get("validate", {}))
    if "n_samples" in validate:
        _require_positive("validate.n_samples", validate["n_samples"], integer=True)
    if "n_random" in validate:
        _require_positive("validate.n_random", validate["n_random"], integer=True)

    return RunConfig(
        material_preset=str(preset),
        material_overrides=overrides,
        pressure_preset=p_preset,
        pressure_csv=p_csv,
        pressure_params=p_params,
        n_cells=n_cells,
        horizon=horizon,
        dt=dt,
        initial_kind=kind,
        initial_params=init_params,
        picard=picard,
        newton_tol=newton_tol,
        newton_max_iter=newton_max_iter,
        line_search=line_search,
        seed=seed,
        out_dir=out_dir,
        contraction=contraction,
        verify=verify,
        validate=validate,
        config_hash=hashlib.sha256(raw_bytes).hexdigest(),
        source_path=str(path),
    )


def _build_model(cfg: RunConfig):
    overrides = dict(cfg.material_overrides)
    if "working_range" in overrides:
        rng = overrides["working_range"]
        if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
            raise ConfigError("material.overrides.working_range must be [lo, hi]")
    return make_preset(cfg.material_preset, overrides or None)


def _build_pressure(cfg: RunConfig, horizon: float | None = None) -> PressureField:
    horizon = horizon if horizon is not None else cfg.horizon
    if cfg.pressure_csv is not None:
        return read_tabulated_csv(cfg.pressure_csv, horizon=horizon)
    return make_analytic_preset(cfg.pressure_preset, cfg.pressure_params,
                                horizon=horizon)


def _build_u0(cfg: RunConfig, grid: Grid1D) -> GridFunction:
    if cfg.initial_kind == "constant":
        return GridFunction(grid, np.full(grid.n_cells, cfg.initial_params["value"]))
    mean = cfg.initial_params["mean"]
    amp = cfg.initial_params["amplitude"]
    return GridFunction.from_callable(
        grid, lambda x: mean + amp * np.cos(math.pi * x))


def _ap_config(cfg: RunConfig, source=None) -> ApConfig:
    return ApConfig(newton_tol=cfg.newton_tol,
                    newton_max_iter=cfg.newton_max_iter,
                    line_search=cfg.line_search,
                    source_term=source)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    """Full solve over [0, horizon]; writes trajectory/ledger/energy/schedule."""
    preset = _build_model(cfg)
    pres = _build_pressure(cfg)
    grid = Grid1D(cfg.n_cells)
    u0 = _build_u0(cfg, grid)
    result = march_windows(u0, cfg.horizon, cfg.dt, preset.model, pres,
                           cfg.picard, _ap_config(cfg))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(result.u, result.v, preset.model,
                         out_dir / "trajectory.csv", cfg.config_hash)
    write_ledger_csv(result.ledger, out_dir / "ledger.csv", cfg.config_hash)
    trace = diagnostics.energy_trace(result.u, preset.model, pres)
    trace.write_csv(out_dir / "energy.csv", cfg.config_hash)
    payload = {"config_sha256": cfg.config_hash}
    payload.update(result.schedule.to_json_dict())
    _write_json(out_dir / "schedule.json", payload)
    with open(out_dir / "schedule.txt", "w", newline="\n") as fh:
        fh.write(f"config_sha256 = {cfg.config_hash}\n")
        fh.write("\n".join(result.schedule.text_lines()) + "\n")
    for warning in trace.warnings:
        print(warning)
    print(f"run: {len(result.schedule.entries)} windows, "
          f"{result.schedule.halvings} halvings, "
          f"max ledger residual {result.ledger.max_abs_residual:.3e}")
    return EXIT_OK


def _manufactured_case(cfg: RunConfig, model, pres: PressureField):
    """Exact decaying-cosine solution and its induced source term."""
    case = cfg.verify.get("case", "decaying-cosine")
    if case != "decaying-cosine":
        raise ConfigError(f"unknown manufactured case {case!r}")
    ends = np.array([0.0, 1.0])
    probe_times = np.linspace(0.0, pres.horizon, 17)
    if any(abs(float(np.asarray(pres.p_x(t, ends))[i])) > 1e-12
           for t in probe_times for i in (0, 1)):
        raise ConfigError(
            "manufactured verification needs a pressure with vanishing "
            "boundary slope (preset 'zero' or 'separable_sin')")

    def u_star(t, x):
        return math.exp(-t) * np.cos(math.pi * np.asarray(x, dtype=float))

    def source(t, x):
        x = np.asarray(x, dtype=float)
        us = u_star(t, x)
        ux = -math.pi * math.exp(-t) * np.sin(math.pi * x)
        uxx = -math.pi ** 2 * us
        lam_us = np.asarray(model.lam(us), dtype=float)
        lam_p = np.asarray(model.lam_prime(us), dtype=float)
        psi_p = np.asarray(model.psi_prime(us), dtype=float)
        px = np.asarray(pres.p_x(t, x), dtype=float)
        pxx = np.asarray(pres.p_xx(t, x), dtype=float)
        return (-psi_p * us - lam_p * ux * ux - lam_us * uxx
                - lam_p * ux * px - lam_us * pxx)

    return u_star, source


def _mms_error(cfg: RunConfig, model, n_cells: int, dt: float,
               horizon: float) -> float:
    """Max-over-time L2 error of the stepper against the exact solution."""
    grid = Grid1D(n_cells)
    pres = _build_pressure(cfg, horizon=horizon)
    u_star, source = _manufactured_case(cfg, model, pres)
    n_steps = max(1, round(horizon / dt))
    window = TimeWindow(0.0, horizon / n_steps, n_steps)
    times = window.times()
    x = grid.cell_centers
    exact = np.stack([u_star(float(t), x) for t in times])
    u_tilde = Trajectory(grid, window.t_start, window.dt, exact)
    u0 = GridFunction(grid, exact[0])
    u, _, _ = solve_ap(u0, u_tilde, window, model, pres,
                       _ap_config(cfg, source=source))
    return float(np.max(grid.norm_h(u.frames - exact)))


def cmd_verify(cfg: RunConfig, out_dir: Path) -> int:
    """Manufactured-solution convergence tables plus steady-state exactness."""
    preset = _build_model(cfg)
    model = preset.model
    v = cfg.verify
    spatial_cells = [int(n) for n in v.get("spatial_cells", [32, 64, 128, 256])]
    spatial_dt = float(v.get("spatial_dt", 1e-5))
    spatial_horizon = float(v.get("spatial_horizon", 0.05))
    temporal_dts = [float(d) for d in v.get("temporal_dts",
                                            [1 / 20, 1 / 40, 1 / 80, 1 / 160])]
    temporal_cells = int(v.get("temporal_cells", 1024))
    temporal_horizon = float(v.get("temporal_horizon", 1.0))

    spatial_errors = [_mms_error(cfg, model, n, spatial_dt, spatial_horizon)
                      for n in spatial_cells]
    temporal_errors = [_mms_error(cfg, model, temporal_cells, dt, temporal_horizon)
                       for dt in temporal_dts]

    def orders(errors, steps):
        return [math.log(errors[i] / errors[i + 1])
                / math.log(steps[i + 1] / steps[i])
                for i in range(len(errors) - 1)]

    spatial_pair = orders(spatial_errors, spatial_cells)
    spatial_order = (math.log(spatial_errors[0] / spatial_errors[-1])
                     / math.log(spatial_cells[-1] / spatial_cells[0]))
    inv_dts = [1.0 / d for d in temporal_dts]
    temporal_pair = orders(temporal_errors, inv_dts)
    temporal_order = (math.log(temporal_errors[0] / temporal_errors[-1])
                      / math.log(inv_dts[-1] / inv_dts[0]))

    # Steady exactness: constant data with zero pressure must be preserved.
    grid = Grid1D(64)
    zero = make_analytic_preset("zero", horizon=1.0)
    window = TimeWindow(0.0, 0.02, 50)
    const = GridFunction(grid, np.full(grid.n_cells, 1.0))
    u_const, _, _ = solve_ap(const, Trajectory.constant(grid, window, const.values),
                             window, model, zero, _ap_config(cfg))
    steady_dev = float(np.max(np.abs(u_const.frames - 1.0)))
    steady_ok = steady_dev <= 10.0 * cfg.newton_tol

    monotone = (all(a > b for a, b in zip(spatial_errors, spatial_errors[1:]))
                and all(a > b for a, b in zip(temporal_errors, temporal_errors[1:])))
    ok = spatial_order >= 1.9 and temporal_order >= 0.9 and steady_ok

    print("spatial refinement (dt = {:g}, T = {:g}):".format(spatial_dt, spatial_horizon))
    for n, e in zip(spatial_cells, spatial_errors):
        print(f"  n={n:5d}  linf_H_error={e:.6e}")
    print(f"  observed spatial order  = {spatial_order:.4f} "
          f"(pairwise: {', '.join(f'{o:.3f}' for o in spatial_pair)})")
    print("temporal refinement (n = {}, T = {:g}):".format(temporal_cells, temporal_horizon))
    for d, e in zip(temporal_dts, temporal_errors):
        print(f"  dt={d:.6g}  linf_H_error={e:.6e}")
    print(f"  observed temporal order = {temporal_order:.4f} "
          f"(pairwise: {', '.join(f'{o:.3f}' for o in temporal_pair)})")
    print(f"steady-state deviation (constant data, zero pressure) = {steady_dev:.3e} "
          f"({'pass' if steady_ok else 'FAIL'})")
    print(f"errors monotone decreasing: {monotone}")

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "verify.json", {
        "config_sha256": cfg.config_hash,
        "spatial": {"cells": spatial_cells, "dt": spatial_dt,
                    "horizon": spatial_horizon, "errors": spatial_errors,
                    "pairwise_orders": spatial_pair, "order": spatial_order},
        "temporal": {"dts": temporal_dts, "cells": temporal_cells,
                     "horizon": temporal_horizon, "errors": temporal_errors,
                     "pairwise_orders": temporal_pair, "order": temporal_order},
        "steady_deviation": steady_dev,
        "monotone": monotone,
        "passed": ok,
    })
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_contraction(cfg: RunConfig, out_dir: Path) -> int:
    """Empirical solution-operator contraction on a window and its halvings."""
    preset = _build_model(cfg)
    pres = _build_pressure(cfg)
    grid = Grid1D(cfg.n_cells)
    u0 = _build_u0(cfg, grid)
    t1 = float(cfg.contraction.get("t1", min(0.05, cfg.horizon)))
    n_pairs = int(cfg.contraction.get("n_pairs", 8))
    halvings = int(cfg.contraction.get("halvings", 0))
    m_bound = cfg.contraction.get("m_bound")
    m_bound = float(m_bound) if m_bound is not None else None

    entries = []
    for j in range(halvings + 1):
        length = t1 / 2 ** j
        n_steps = max(8, round(length / cfg.dt))
        window = TimeWindow(0.0, length / n_steps, n_steps)
        stats = estimate_contraction(preset.model, pres, window, u0, n_pairs,
                                     m_bound=m_bound, seed=cfg.seed,
                                     ap_config=_ap_config(cfg))
        entries.append(stats)
        print(f"window [0, {length:.6g}]: mu_hat={stats.max_ratio:.6g} "
              f"median={stats.median_ratio:.6g} "
              f"c5_plus_c6_hat={stats.c5_plus_c6_hat:.6g}")

    ok = all(s.max_ratio < 1.0 for s in entries)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "contraction.json", {
        "config_sha256": cfg.config_hash,
        "windows": [s.to_json_dict() for s in entries],
        "passed": ok,
    })
    print(f"contraction: {'mu_hat < 1 on all windows' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_validate(cfg: RunConfig, out_dir: Path) -> int:
    """Bound-constant checks plus the randomized inequality suite."""
    preset = _build_model(cfg)
    model = preset.model
    n_samples = int(cfg.validate.get("n_samples", 4096))
    n_random = int(cfg.validate.get("n_random", 1000))
    u_range = cfg.validate.get("u_range")
    if u_range is not None:
        if not (isinstance(u_range, (list, tuple)) and len(u_range) == 2):
            raise ConfigError("validate.u_range must be [lo, hi]")
        u_range = (float(u_range[0]), float(u_range[1]))

    assumptions = validate_assumptions(model, u_range=u_range, n_samples=n_samples)
    derivatives = check_derivative_consistency(model, u_range=u_range)
    grid = Grid1D(cfg.n_cells)
    properties = diagnostics.lemma_property_suite(model, grid, n_random,
                                                  seed=cfg.seed, u_range=u_range)
    deriv_ok = all(c.passed for c in derivatives)
    ok = assumptions.passed and deriv_ok and properties.passed

    print(f"material: {preset.name} (range {assumptions.u_range}, "
          f"{n_samples} samples, {n_random} random inputs)")
    for line in assumptions.lines():
        print("  " + line)
    for c in derivatives:
        print(f"  {c.name:>18s}: {'pass' if c.passed else 'FAIL'}  "
              f"margin={c.margin:.6e} at u={c.worst_point:.6g}")
    for line in properties.lines():
        print("  " + line)
    print(f"validate: {'all checks passed' if ok else 'FAILURES PRESENT'}")

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "validate.json", {
        "config_sha256": cfg.config_hash,
        "material": preset.name,
        "assumptions": [
            {"name": c.name, "passed": c.passed, "margin": c.margin,
             "worst_point": c.worst_point} for c in assumptions.checks],
        "derivatives": [
            {"name": c.name, "passed": c.passed, "margin": c.margin,
             "worst_point": c.worst_point} for c in derivatives],
        "properties": [
            {"name": e.name, "passed": e.passed, "margin": e.margin,
             "informational": e.informational, "detail": e.detail}
            for e in properties.entries],
        "passed": ok,
    })
    return EXIT_OK if ok else EXIT_SOLVER


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solver",
        description="1D nonlinear moisture-transport solver "
                    "(implicit finite volumes + fixed-point window continuation)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("run", "march the full horizon and write solution artifacts"),
            ("verify", "manufactured-solution convergence orders"),
            ("contraction", "empirical solution-operator contraction factors"),
            ("validate", "bound constants and inequality property suite")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
    return parser


_COMMANDS = {
    "run": cmd_run,
    "verify": cmd_verify,
    "contraction": cmd_contraction,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out_dir = Path(args.out if args.out is not None else cfg.out_dir)
        return _COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, IngestionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MoistsolveError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
