"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
All tolerances are fixed here; nothing is calibrated at runtime.
"""

import json
import math
import time

import numpy as np
import pytest

from moistsolve import (ApConfig, GridFunction, Grid1D, PicardConfig,
                        TimeWindow, Trajectory, l2x_norm, make_analytic_preset,
                        make_preset, march_windows, picard_solve, solve_ap)
from moistsolve.cli import EXIT_OK, main

from support import cosine_field

NEWTON_TOL = 1e-10
PICARD_TOL = 1e-8

RUN_CONFIG = """\
[material]
preset = "synthetic-A"

[pressure]
preset = "separable_sin"
amplitude = 1.0
omega = 6.283185307179586

[grid]
n_cells = 64

[time]
horizon = 1.0
dt = 0.005

[initial]
kind = "cosine"
mean = 1.0
amplitude = 0.5

[picard]
tol = 1e-8
initial_window = 0.1
window_min = 0.01

[newton]
tol = 1e-10

[run]
seed = 12345
out_dir = "out"

[contraction]
t1 = 0.05
n_pairs = 8
halvings = 3
"""

VALIDATE_CONFIG = """\
[material]
preset = "synthetic-A"

[grid]
n_cells = 512

[time]
horizon = 1.0
dt = 0.005

[run]
seed = 12345

[validate]
n_samples = 10000
n_random = 1000
"""

VERIFY_SMALL_CONFIG = """\
[material]
preset = "synthetic-A"

[pressure]
preset = "separable_sin"
amplitude = 1.0
omega = 6.283185307179586

[run]
seed = 12345

[verify]
spatial_cells = [32, 64]
spatial_dt = 1e-4
spatial_horizon = 0.01
temporal_dts = [0.05, 0.025]
temporal_cells = 128
temporal_horizon = 0.2
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    paths = {}
    for name, text in (("run", RUN_CONFIG), ("validate", VALIDATE_CONFIG),
                       ("verify_small", VERIFY_SMALL_CONFIG)):
        path = root / f"{name}.toml"
        path.write_text(text)
        paths[name] = path
    paths["root"] = root
    return paths


@pytest.fixture(scope="module")
def stack():
    preset = make_preset("synthetic-A")
    pres = make_analytic_preset("separable_sin",
                                {"amplitude": 1.0, "omega": 2.0 * math.pi},
                                horizon=1.0)
    grid = Grid1D(64)
    u0 = GridFunction(grid, cosine_field(grid))
    return preset.model, pres, grid, u0


def report(number, ok, detail):
    print(f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_1_assumption_and_lemma_suite(workspace):
    started = time.perf_counter()
    code = main(["validate", "--config", str(workspace["validate"]),
                 "--out", str(workspace["root"] / "out_validate")])
    elapsed = time.perf_counter() - started
    payload = json.loads(
        (workspace["root"] / "out_validate" / "validate.json").read_text())
    ok = code == EXIT_OK and payload["passed"] and elapsed < 30.0
    report(1, ok, f"validate on synthetic-A: exit={code}, "
                  f"all checks passed={payload['passed']}, "
                  f"1e4 samples + 1e3 random inputs in {elapsed:.1f}s (< 30s)")


def test_criterion_2_manufactured_convergence(workspace, stack):
    model, _, _, _ = stack
    started = time.perf_counter()
    code = main(["verify", "--config", str(workspace["run"]),
                 "--out", str(workspace["root"] / "out_verify")])
    elapsed = time.perf_counter() - started
    payload = json.loads(
        (workspace["root"] / "out_verify" / "verify.json").read_text())
    spatial = payload["spatial"]
    temporal = payload["temporal"]
    ok = (code == EXIT_OK
          and spatial["cells"] == [32, 64, 128, 256]
          and spatial["dt"] == 1e-5
          and temporal["dts"] == [1 / 20, 1 / 40, 1 / 80, 1 / 160]
          and temporal["cells"] == 1024
          and spatial["order"] >= 1.9
          and temporal["order"] >= 0.9
          and payload["monotone"]
          and elapsed < 300.0)
    report(2, ok, f"manufactured solution: spatial order "
                  f"{spatial['order']:.3f} (>= 1.9), temporal order "
                  f"{temporal['order']:.3f} (>= 0.9), errors monotone="
                  f"{payload['monotone']}, {elapsed:.0f}s (< 300s)")


def test_criterion_3_conservation(stack):
    model, pres, _, _ = stack
    grid = Grid1D(128)
    u0 = GridFunction(grid, cosine_field(grid))
    config = ApConfig(newton_tol=NEWTON_TOL)

    zero = make_analytic_preset("zero", horizon=1.0)
    window = TimeWindow(0.0, 1e-3, 1000)
    u_tilde = Trajectory.constant(grid, window, u0.values)
    _, _, ledger = solve_ap(u0, u_tilde, window, model, zero, config)
    drift = float(np.max(np.abs(ledger.masses - ledger.masses[0])))
    drift_rel = drift / abs(ledger.masses[0])

    window_p = TimeWindow(0.0, 5e-3, 200)
    u_tilde_p = Trajectory.constant(grid, window_p, u0.values)
    _, _, ledger_p = solve_ap(u0, u_tilde_p, window_p, model, pres, config)

    ok = drift_rel < 1e-8 and ledger_p.max_abs_residual <= 10.0 * NEWTON_TOL
    report(3, ok, f"conservation: no-flux relative mass drift {drift_rel:.2e} "
                  f"over 1000 steps (< 1e-8); with pressure active, max ledger "
                  f"residual {ledger_p.max_abs_residual:.2e} "
                  f"(<= {10 * NEWTON_TOL:.0e})")


def test_criterion_4_contraction(workspace, stack):
    model, pres, grid, u0 = stack
    code = main(["contraction", "--config", str(workspace["run"]),
                 "--out", str(workspace["root"] / "out_contraction")])
    payload = json.loads(
        (workspace["root"] / "out_contraction" / "contraction.json").read_text())
    mus = [w["mu_hat"] for w in payload["windows"]]

    window = TimeWindow(0.0, 0.005, 10)
    result = picard_solve(u0, window, model, pres,
                          PicardConfig(picard_tol=PICARD_TOL))
    ratios = result.report.ratios
    geometric = all(r < 1.0 for r in ratios)
    tail_ok = result.report.mu_hat <= mus[0] + 0.05

    ok = (code == EXIT_OK and len(mus) == 4
          and all(m < 1.0 for m in mus)
          and all(a > b for a, b in zip(mus, mus[1:]))
          and geometric and tail_ok)
    report(4, ok, f"contraction: mu_hat={mus[0]:.4f} < 1 at T1=0.05, halving "
                  f"sequence {['%.4f' % m for m in mus]} decreasing; Picard "
                  f"tail ratio {result.report.mu_hat:.4f} <= mu_hat + 0.05")


def test_criterion_5_uniqueness_and_continuation(stack):
    model, pres, grid, u0 = stack
    pc = PicardConfig(picard_tol=PICARD_TOL, initial_window=0.1,
                      window_min=0.01)
    window = TimeWindow(0.0, 0.005, 10)
    r_default = picard_solve(u0, window, model, pres, pc)
    bumped = Trajectory(grid, 0.0, 0.005,
                        np.tile(u0.values, (11, 1))
                        + 0.25 * np.sin(math.pi * grid.cell_centers))
    r_bumped = picard_solve(u0, window, model, pres, pc, u_tilde0=bumped)
    guess_gap = l2x_norm(grid, r_default.u.frames - r_bumped.u.frames,
                         window.dt)

    main_run = march_windows(u0, 1.0, 0.005, model, pres, pc)
    tiny = march_windows(u0, 1.0, 0.005, model, pres,
                         PicardConfig(picard_tol=PICARD_TOL,
                                      initial_window=0.04, window_min=0.04))
    march_gap = float(np.max(grid.norm_h(main_run.u.frames - tiny.u.frames)))

    ok = guess_gap < 10.0 * PICARD_TOL and march_gap < 1e-5
    report(5, ok, f"uniqueness: distinct seeds differ by {guess_gap:.2e} "
                  f"(< {10 * PICARD_TOL:.0e}); windowed march vs tiny-window "
                  f"reference {march_gap:.2e} in Linf(H) (< 1e-5)")


def test_criterion_6_trivial_exactness(stack):
    model, _, grid, _ = stack
    zero = make_analytic_preset("zero", horizon=1.0)
    const = GridFunction(grid, np.full(grid.n_cells, 1.5))
    pc = PicardConfig(picard_tol=PICARD_TOL, initial_window=0.1,
                      window_min=0.01)
    result = march_windows(const, 1.0, 0.005, model, zero, pc,
                           ApConfig(newton_tol=NEWTON_TOL))
    deviation = float(np.max(np.abs(result.u.frames - 1.5)))

    u0 = GridFunction(grid, cosine_field(grid))
    window = TimeWindow(0.0, 0.005, 20)
    picard = picard_solve(u0, window, model, zero,
                          PicardConfig(picard_tol=PICARD_TOL))
    d1_exact = picard.report.diffs[1] == 0.0

    ok = deviation <= 10.0 * NEWTON_TOL and d1_exact
    report(6, ok, f"trivial exactness: constant state deviates {deviation:.1e} "
                  f"over the horizon (<= {10 * NEWTON_TOL:.0e}); "
                  f"d_1 = {picard.report.diffs[1]!r} (exactly 0.0)")


def test_criterion_7_determinism(workspace):
    jobs = (
        ("run", workspace["run"],
         ("trajectory.csv", "ledger.csv", "energy.csv", "schedule.json",
          "schedule.txt")),
        ("contraction", workspace["run"], ("contraction.json",)),
        ("validate", workspace["validate"], ("validate.json",)),
        ("verify", workspace["verify_small"], ("verify.json",)),
    )
    identical = True
    detail = []
    for command, config, artifacts in jobs:
        blobs = []
        for tag in ("a", "b"):
            out = workspace["root"] / f"det_{command}_{tag}"
            code = main([command, "--config", str(config), "--out", str(out),
                         "--seed", "777"])
            assert code == EXIT_OK, f"{command} exited {code}"
            blobs.append({name: (out / name).read_bytes()
                          for name in artifacts})
        same = blobs[0] == blobs[1]
        identical = identical and same
        detail.append(f"{command}={'identical' if same else 'DIFFERS'}")
    report(7, identical,
           "determinism with fixed seed: " + ", ".join(detail))
