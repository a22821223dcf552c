"""Picard fixed-point driver with adaptive time-window continuation.

The solution operator of the frozen-coefficient problem maps a coupling
trajectory ``u~`` to the solution ``u``; on a short enough window it is
a contraction in the discrete L2(0,T;X) norm, so repeated application
converges to the unique solution of the full nonlinear problem.  The
driver measures the contraction empirically: per-iterate difference
norms, their ratios, and the tail ratio ``mu_hat``.  Windows whose
ratios persistently exceed the safety threshold ``theta`` are rejected
and geometrically halved (never below ``window_min``); accepted windows
are chained by restarting from their terminal frame until the horizon
is covered.

Window bookkeeping is done in integer multiples of the base time step;
a window shorter than 8 base steps is integrated on a power-of-two
refinement of the base step so the assembled full-horizon trajectory
stays on the base grid exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ap_solver import ApConfig, MassLedger, TimeWindow, Trajectory, solve_ap
from .constitutive import ConstitutiveModel
from .errors import (ConfigError, MarchError, PicardIterationError,
                     WindowTooLargeError)
from .grid import Grid1D, GridFunction
from .pressure import PressureField

logger = logging.getLogger(__name__)

# Consecutive ratio exceedances of theta that flag a window as too large.
_NONCONTRACTION_PATIENCE = 3
# Minimum number of steps per window; shorter windows refine their dt.
_MIN_STEPS_PER_WINDOW = 8
# Tolerated envelope escape for the a-priori affine monitor.
_ENVELOPE_SLACK = 0.05


@dataclass(frozen=True)
class PicardConfig:
    """Fixed-point iteration and window-continuation knobs."""

    picard_tol: float = 1e-8
    picard_max_iter: int = 60
    theta: float = 0.5
    window_min: float = 1e-3
    initial_window: float = 0.1

    def __post_init__(self):
        if self.picard_tol <= 0.0:
            raise ConfigError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ConfigError("picard_max_iter must be at least 1")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError("theta must lie in (0, 1)")
        if self.window_min <= 0.0 or self.initial_window <= 0.0:
            raise ConfigError("window lengths must be positive")
        if self.window_min > self.initial_window:
            raise ConfigError("window_min must not exceed initial_window")


def l2x_norm(grid: Grid1D, frames: np.ndarray, dt: float) -> float:
    """Discrete L2-in-time X-norm of a frame stack, frame 0 excluded.

    Frame 0 is excluded because every Picard iterate shares the initial
    condition, so difference norms vanish there identically.
    """
    f = np.asarray(frames, dtype=float)[1:]
    if f.size == 0:
        return 0.0
    g = grid.gradient(f)
    per_frame = ((f * f).sum(axis=-1) + (g * g).sum(axis=-1)) * grid.dx
    return float(math.sqrt(dt * per_frame.sum()))


def _sup_grad_sq(grid: Grid1D, frames: np.ndarray) -> float:
    g = grid.gradient(np.asarray(frames, dtype=float))
    return float(np.max((g * g).sum(axis=-1) * grid.dx))


def _affine_envelope(r: Sequence[float], q: Sequence[float]) -> tuple[bool, float]:
    """Least-squares affine fit q ~ a*r + b; reports the worst relative escape."""
    r = np.asarray(r, dtype=float)
    q = np.asarray(q, dtype=float)
    if len(r) < 2 or float(np.ptp(r)) <= 1e-9 * max(1.0, float(np.max(np.abs(r)))):
        predicted = np.full_like(q, max(float(np.max(q)), 1e-300))
    else:
        a, b = np.polyfit(r, q, 1)
        predicted = a * r + b
    scale = np.maximum(np.abs(predicted), 1e-12 * max(1.0, float(np.max(q))))
    escape = float(np.max((q - predicted) / scale))
    return escape <= _ENVELOPE_SLACK, escape


@dataclass
class PicardReport:
    """Per-window iteration record: difference norms, ratios, contraction."""

    window: tuple[float, float]
    diffs: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    iterations: int = 0
    accepted: bool = False
    m_observed: float = 0.0
    grad_sups: list[float] = field(default_factory=list)
    apriori_inputs: list[float] = field(default_factory=list)
    apriori_q1: list[float] = field(default_factory=list)
    apriori_q2: list[float] = field(default_factory=list)

    @property
    def mu_hat(self) -> float:
        """Empirical contraction factor: the largest tail ratio."""
        if not self.ratios:
            return 0.0
        return float(max(self.ratios[-3:]))

    @property
    def c5_plus_c6_hat(self) -> float:
        """Implied difference-estimate constant, from mu = sqrt(C*T1)."""
        length = self.window[1] - self.window[0]
        if length <= 0.0:
            return 0.0
        return self.mu_hat ** 2 / length

    def envelope_q1(self) -> tuple[bool, float]:
        return _affine_envelope(self.apriori_inputs, self.apriori_q1)

    def envelope_q2(self) -> tuple[bool, float]:
        return _affine_envelope(self.apriori_inputs, self.apriori_q2)

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "diffs": [float(d) for d in self.diffs],
            "ratios": [float(r) for r in self.ratios],
            "mu_hat": self.mu_hat,
            "c5_plus_c6_hat": self.c5_plus_c6_hat,
            "window": [self.window[0], self.window[1]],
            "accepted": self.accepted,
        }

    def text_lines(self) -> list[str]:
        ok1, esc1 = self.envelope_q1()
        ok2, esc2 = self.envelope_q2()
        lines = [
            f"window_start = {self.window[0]:.17g}",
            f"window_end = {self.window[1]:.17g}",
            f"iterations = {self.iterations}",
            f"accepted = {str(self.accepted).lower()}",
            f"mu_hat = {self.mu_hat:.17g}",
            f"c5_plus_c6_hat = {self.c5_plus_c6_hat:.17g}",
            f"grad_bound_m = {self.m_observed:.17g}",
            f"apriori_envelope_q1_ok = {str(ok1).lower()}",
            f"apriori_envelope_q1_escape = {esc1:.17g}",
            f"apriori_envelope_q2_ok = {str(ok2).lower()}",
            f"apriori_envelope_q2_escape = {esc2:.17g}",
        ]
        for i, d in enumerate(self.diffs):
            lines.append(f"diff_{i} = {d:.17g}")
        for i, r in enumerate(self.ratios):
            lines.append(f"ratio_{i} = {r:.17g}")
        return lines


@dataclass
class PicardResult:
    u: Trajectory
    v: Trajectory
    ledger: MassLedger
    report: PicardReport


def gamma(u_tilde: Trajectory, u0: GridFunction, window: TimeWindow,
          model: ConstitutiveModel, pres: PressureField,
          ap_config: ApConfig | None = None) -> Trajectory:
    """Solution operator: the u-trajectory solving the frozen problem."""
    u, _, _ = solve_ap(u0, u_tilde, window, model, pres, ap_config)
    return u


def picard_solve(u0: GridFunction, window: TimeWindow,
                 model: ConstitutiveModel, pres: PressureField,
                 picard_config: PicardConfig | None = None,
                 ap_config: ApConfig | None = None,
                 u_tilde0: Trajectory | None = None) -> PicardResult:
    """Iterate the solution operator to its fixed point on one window.

    The seed iterate is the constant-in-time extension of ``u0`` unless
    ``u_tilde0`` is supplied.  Convergence is a difference norm below
    ``picard_tol`` in the discrete L2(0,T;X) norm.  Raises
    :class:`WindowTooLargeError` when the ratio sequence persistently
    exceeds ``theta`` and :class:`PicardIterationError` at the cap;
    both carry the partial report.
    """
    pc = picard_config or PicardConfig()
    ac = ap_config or ApConfig()
    grid = u0.grid
    if u_tilde0 is None:
        u_tilde = Trajectory.constant(grid, window, u0.values)
    else:
        if not u_tilde0.covers(window):
            raise ValueError("initial iterate does not cover the window")
        u_tilde = u_tilde0
    report = PicardReport(window=(window.t_start, window.t_end))
    report.grad_sups.append(_sup_grad_sq(grid, u_tilde.frames))

    result: PicardResult | None = None
    for _ in range(pc.picard_max_iter):
        u_new, v_new, ledger = solve_ap(u0, u_tilde, window, model, pres, ac)
        report.iterations += 1
        d = l2x_norm(grid, u_new.frames - u_tilde.frames[:window.n_steps + 1],
                     window.dt)
        report.diffs.append(d)
        report.grad_sups.append(_sup_grad_sq(grid, u_new.frames))
        report.apriori_inputs.append(
            float(window.dt * (grid.gradient(u_tilde.frames[1:]) ** 2).sum() * grid.dx))
        report.apriori_q1.append(_q1_monitor(grid, u_new.frames, window.dt))
        report.apriori_q2.append(_q2_monitor(grid, u_new.frames, window.dt))
        if len(report.diffs) >= 2 and report.diffs[-2] > 0.0:
            report.ratios.append(report.diffs[-1] / report.diffs[-2])
        result = PicardResult(u_new, v_new, ledger, report)
        if d < pc.picard_tol:
            report.accepted = True
            break
        tail = report.ratios[-_NONCONTRACTION_PATIENCE:]
        if (len(tail) == _NONCONTRACTION_PATIENCE
                and all(r >= pc.theta for r in tail)):
            report.m_observed = float(max(report.grad_sups))
            raise WindowTooLargeError(
                f"no contraction on window {report.window}: last ratios "
                f"{[f'{r:.3f}' for r in tail]} all >= theta={pc.theta}",
                report=report)
        u_tilde = u_new
    else:
        report.m_observed = float(max(report.grad_sups))
        raise PicardIterationError(
            f"fixed-point tolerance {pc.picard_tol:g} not met in "
            f"{pc.picard_max_iter} iterations on window {report.window}",
            report=report)

    report.m_observed = float(max(report.grad_sups))
    ok1, _ = report.envelope_q1()
    ok2, _ = report.envelope_q2()
    if not (ok1 and ok2):
        logger.warning("a-priori affine envelope exceeded on window %s", report.window)
    return result


def _q1_monitor(grid: Grid1D, frames: np.ndarray, dt: float) -> float:
    """max_t [ |u(t)|_H^2 + int_0^t |u_x|_H^2 ] over the frames."""
    f = np.asarray(frames, dtype=float)
    h2 = (f * f).sum(axis=-1) * grid.dx
    g2 = (grid.gradient(f) ** 2).sum(axis=-1) * grid.dx
    cumulative = np.concatenate(([0.0], np.cumsum(g2[1:]) * dt))
    return float(np.max(h2 + cumulative))


def _q2_monitor(grid: Grid1D, frames: np.ndarray, dt: float) -> float:
    """max_t [ |u_x(t)|_H^2 + int_0^t |u_t|_H^2 ] over the frames."""
    f = np.asarray(frames, dtype=float)
    g2 = (grid.gradient(f) ** 2).sum(axis=-1) * grid.dx
    if f.shape[0] > 1:
        du = np.diff(f, axis=0) / dt
        t2 = (du * du).sum(axis=-1) * grid.dx
        cumulative = np.concatenate(([0.0], np.cumsum(t2) * dt))
    else:
        cumulative = np.zeros(1)
    return float(np.max(g2 + cumulative))


# ----------------------------------------------------------------------
# Window continuation
# ----------------------------------------------------------------------

@dataclass
class WindowRecord:
    t_start: float
    t_end: float
    dt: float
    n_steps: int
    report: PicardReport


@dataclass
class WindowSchedule:
    """Accepted windows partitioning [0, T], plus the halving count."""

    entries: list[WindowRecord] = field(default_factory=list)
    halvings: int = 0
    total_span: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "total_span": self.total_span,
            "halvings": self.halvings,
            "windows": [
                {"t_start": e.t_start, "t_end": e.t_end, "dt": e.dt,
                 "n_steps": e.n_steps, "report": e.report.to_json_dict()}
                for e in self.entries
            ],
        }

    def text_lines(self) -> list[str]:
        lines = [f"total_span = {self.total_span:.17g}",
                 f"halvings = {self.halvings}",
                 f"windows = {len(self.entries)}"]
        for i, e in enumerate(self.entries):
            lines.append(f"[window {i}]")
            lines.extend("  " + line for line in e.report.text_lines())
        return lines


@dataclass
class MarchResult:
    u: Trajectory
    v: Trajectory
    ledger: MassLedger
    schedule: WindowSchedule
    dt: float


def march_windows(u0: GridFunction, horizon: float, dt: float,
                  model: ConstitutiveModel, pres: PressureField,
                  picard_config: PicardConfig | None = None,
                  ap_config: ApConfig | None = None) -> MarchResult:
    """Cover [0, horizon] with accepted fixed-point windows.

    The base step is adjusted to divide the horizon exactly.  Rejected
    windows are halved down to ``window_min``; reaching the floor
    without contraction raises :class:`MarchError` with the schedule
    gathered so far.  The returned trajectories live on the base step
    grid over the whole horizon.
    """
    if horizon <= 0.0:
        raise ConfigError("horizon must be positive")
    pc = picard_config or PicardConfig()
    grid = u0.grid
    n_total = max(1, round(horizon / dt))
    dt_eff = horizon / n_total
    m_init = min(max(1, round(pc.initial_window / dt_eff)), n_total)
    m_min = min(max(1, round(pc.window_min / dt_eff)), m_init)

    schedule = WindowSchedule(total_span=horizon)
    u_frames = [np.asarray(u0.values, dtype=float)[None, :]]
    v_frames = [np.asarray(model.kirchhoff(u0.values), dtype=float)[None, :]]
    ledgers: list[MassLedger] = []
    u_cur = u0
    done = 0
    m = m_init
    while done < n_total:
        m_window = min(m, n_total - done)
        refine = 0
        while m_window * 2 ** refine < _MIN_STEPS_PER_WINDOW:
            refine += 1
        window = TimeWindow(t_start=done * dt_eff, dt=dt_eff / 2 ** refine,
                            n_steps=m_window * 2 ** refine)
        try:
            result = picard_solve(u_cur, window, model, pres, pc, ap_config)
        except WindowTooLargeError as exc:
            schedule.halvings += 1
            if m_window <= m_min:
                raise MarchError(
                    f"window floor {pc.window_min:g} reached at t={window.t_start:g} "
                    "without contraction; the configured horizon cannot be "
                    "continued at this step size",
                    schedule=schedule, report=exc.report) from exc
            m = max(m_min, m_window // 2)
            logger.warning("halving window at t=%.6g to %d base steps",
                           window.t_start, m)
            continue
        stride = 2 ** refine
        u_frames.append(result.u.frames[stride::stride])
        v_frames.append(result.v.frames[stride::stride])
        ledgers.append(result.ledger)
        schedule.entries.append(WindowRecord(window.t_start, window.t_end,
                                             window.dt, window.n_steps,
                                             result.report))
        logger.info("window [%.6g, %.6g] accepted: %d iterations, mu_hat=%.3g",
                    window.t_start, window.t_end, result.report.iterations,
                    result.report.mu_hat)
        u_cur = result.u.frame(result.u.n_steps)
        done += m_window

    u_traj = Trajectory(grid, 0.0, dt_eff, np.concatenate(u_frames, axis=0))
    v_traj = Trajectory(grid, 0.0, dt_eff, np.concatenate(v_frames, axis=0))
    return MarchResult(u_traj, v_traj, MassLedger.concatenate(ledgers),
                       schedule, dt_eff)


# ----------------------------------------------------------------------
# Empirical contraction estimation
# ----------------------------------------------------------------------

@dataclass
class ContractionStats:
    """Lipschitz-ratio statistics of the solution operator on a window."""

    window: tuple[float, float]
    ratios: list[float]
    max_ratio: float
    median_ratio: float
    c5_plus_c6_hat: float
    m_bound: float
    n_pairs: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "window": [self.window[0], self.window[1]],
            "ratios": [float(r) for r in self.ratios],
            "mu_hat": self.max_ratio,
            "median_ratio": self.median_ratio,
            "c5_plus_c6_hat": self.c5_plus_c6_hat,
            "m_bound": self.m_bound,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
        }


_PROBE_MODES = 4


def _random_member(rng: np.random.Generator, grid: Grid1D, u0: np.ndarray,
                   window: TimeWindow, m_bound: float,
                   grad_budget: float) -> np.ndarray:
    """Random smooth trajectory around u0 with sup_t |u_x|_H^2 <= m_bound.

    Low Fourier modes in x with smooth random modulation in the
    normalised window time; the perturbation amplitude is scaled so the
    triangle inequality guarantees membership in the gradient ball.
    """
    x = grid.cell_centers
    tau = (window.times() - window.t_start) / max(window.length, 1e-300)
    coeff = rng.uniform(-1.0, 1.0, _PROBE_MODES) / np.arange(1, _PROBE_MODES + 1) ** 2
    freq = rng.integers(0, 3, _PROBE_MODES)
    phase = rng.uniform(0.0, 2.0 * math.pi, _PROBE_MODES)
    amp = rng.uniform(0.3, 1.0)
    # |d/dx sum c_m cos(m pi x) g_m(t)|_H <= sum |c_m| m pi / sqrt(2)
    cap = float(np.sum(np.abs(coeff) * np.arange(1, _PROBE_MODES + 1) * math.pi
                       / math.sqrt(2.0)))
    coeff *= amp * grad_budget / cap
    frames = np.tile(u0, (window.n_steps + 1, 1))
    for mode in range(_PROBE_MODES):
        shape = np.cos((mode + 1) * math.pi * x)
        wobble = np.cos(2.0 * math.pi * freq[mode] * tau + phase[mode])
        frames += coeff[mode] * wobble[:, None] * shape[None, :]
    return frames


def estimate_contraction(model: ConstitutiveModel, pres: PressureField,
                         window: TimeWindow, u0: GridFunction, n_pairs: int,
                         m_bound: float | None = None, seed: int = 0,
                         ap_config: ApConfig | None = None) -> ContractionStats:
    """Sample Lipschitz ratios of the solution operator on random pairs.

    Pairs are drawn from the gradient ball of radius sqrt(m_bound)
    around the initial condition (default bound: one more than the
    initial gradient norm, squared).  The implied difference-estimate
    constant is ``mu_hat**2 / window_length``.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    grid = u0.grid
    g0 = math.sqrt(_sup_grad_sq(grid, u0.values[None, :]))
    if m_bound is None:
        m_bound = (g0 + 1.0) ** 2
    budget = math.sqrt(m_bound) - g0
    if budget <= 0.0:
        raise ConfigError(
            f"m_bound={m_bound:g} leaves no room around the initial gradient "
            f"norm {g0 ** 2:g}")
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n_pairs):
        f1 = _random_member(rng, grid, u0.values, window, m_bound, budget)
        f2 = _random_member(rng, grid, u0.values, window, m_bound, budget)
        t1 = Trajectory(grid, window.t_start, window.dt, f1)
        t2 = Trajectory(grid, window.t_start, window.dt, f2)
        out1 = gamma(t1, u0, window, model, pres, ap_config)
        out2 = gamma(t2, u0, window, model, pres, ap_config)
        denom = l2x_norm(grid, f1 - f2, window.dt)
        num = l2x_norm(grid, out1.frames - out2.frames, window.dt)
        ratios.append(num / denom if denom > 0.0 else 0.0)
    max_ratio = float(max(ratios))
    length = max(window.length, 1e-300)
    return ContractionStats(
        window=(window.t_start, window.t_end),
        ratios=ratios,
        max_ratio=max_ratio,
        median_ratio=float(np.median(ratios)),
        c5_plus_c6_hat=max_ratio ** 2 / length,
        m_bound=float(m_bound),
        n_pairs=n_pairs,
        seed=seed,
    )
