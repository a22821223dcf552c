"""Implicit finite-volume solver for the frozen-coefficient problem.

The transport equation is advanced in the transformed variable
``v = K(u)`` (conductivity primitive), where it reads

    d/dt b(v) = v_xx + d/dx( lam(u~) p_x ),    b = psi o K^{-1},

with the no-total-flux boundary condition ``v_x + p_x = 0`` and a given
coupling trajectory ``u~``.  One backward-Euler step solves, cell-wise,

    (b(v_i^{n+1}) - b(v_i^n)) dx/dt = F_{i+1/2} - F_{i-1/2} + dx S_i,

with total fluxes

    F_{i+1/2} = (v_{i+1}-v_i)/dx + lam(u~_{i+1/2}) p_x   (interior faces),
    F_boundary = (lam(u~_trace) - 1) p_x                 (domain ends),

the boundary form being the interior flux with ``v_x = -p_x``
substituted.  All time-dependent data are evaluated at the new time
level.  Summing the scheme over cells telescopes the interior fluxes,
so the discrete mass ledger balances to Newton tolerance by
construction.

The inner Newton iteration has a tridiagonal Jacobian
``diag(b'(v)) dx/dt + (negative) discrete Laplacian``; steps are damped
by halving when the max-norm residual fails to decrease.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .constitutive import ConstitutiveModel
from .errors import NewtonError, NumericsError, StepError
from .grid import Grid1D, GridFunction
from .pressure import PressureField

_LINE_SEARCH_HALVINGS = 20


@dataclass(frozen=True)
class TimeWindow:
    """A uniform-step time interval [t_start, t_start + n_steps*dt]."""

    t_start: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be nonnegative, got {self.n_steps}")

    @property
    def length(self) -> float:
        return self.n_steps * self.dt

    @property
    def t_end(self) -> float:
        return self.t_start + self.length

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True, eq=False)
class ApConfig:
    """Inner-solver knobs and the manufactured-solution source hook."""

    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    line_search: bool = True
    source_term: Callable | None = None

    def __post_init__(self):
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")


@dataclass
class Trajectory:
    """Time-indexed stack of cell fields with uniform step dt.

    ``frames`` has shape (n_steps+1, n_cells); frame 0 is the initial
    condition of whatever produced the trajectory.
    """

    grid: Grid1D
    t0: float
    dt: float
    frames: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=float)
        if f.ndim != 2 or f.shape[1] != self.grid.n_cells:
            raise ValueError(f"frames shape {f.shape} does not match grid "
                             f"({self.grid.n_cells} cells)")
        if not np.all(np.isfinite(f)):
            raise ValueError("trajectory contains non-finite entries")
        self.frames = f

    @property
    def n_steps(self) -> int:
        return self.frames.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.frames.shape[0])

    @classmethod
    def constant(cls, grid: Grid1D, window: TimeWindow, values) -> "Trajectory":
        """Constant-in-time extension of one field over a window."""
        v = np.asarray(values, dtype=float)
        return cls(grid, window.t_start, window.dt,
                   np.tile(v, (window.n_steps + 1, 1)))

    def frame(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.frames[k])

    def covers(self, window: TimeWindow, rtol: float = 1e-9) -> bool:
        scale = max(1.0, abs(window.t_start), window.dt)
        return (abs(self.t0 - window.t_start) <= rtol * scale
                and abs(self.dt - window.dt) <= rtol * window.dt
                and self.n_steps >= window.n_steps)


@dataclass
class MassLedger:
    """Per-step mass accounting: stored change vs boundary flux + source.

    ``masses[k]`` is the stored mass of frame k; for step k (from frame
    k to k+1) the residual is

        masses[k+1] - masses[k] - dt*(flux_right - flux_left) - dt*source,

    which telescopes to the Newton residual sum and therefore stays
    below ``n_cells * dt * newton_tol``.
    """

    t: np.ndarray
    masses: np.ndarray
    flux_left: np.ndarray
    flux_right: np.ndarray
    source_integral: np.ndarray
    residuals: np.ndarray

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self.residuals) else 0.0

    @classmethod
    def concatenate(cls, ledgers: list["MassLedger"]) -> "MassLedger":
        if not ledgers:
            raise ValueError("nothing to concatenate")
        return cls(
            t=np.concatenate([l.t for l in ledgers]),
            masses=np.concatenate([ledgers[0].masses[:1]]
                                  + [l.masses[1:] for l in ledgers]),
            flux_left=np.concatenate([l.flux_left for l in ledgers]),
            flux_right=np.concatenate([l.flux_right for l in ledgers]),
            source_integral=np.concatenate([l.source_integral for l in ledgers]),
            residuals=np.concatenate([l.residuals for l in ledgers]),
        )


@dataclass
class NewtonInfo:
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    converged: bool = True


def newton_solve(system, v0: np.ndarray, config: ApConfig) -> tuple[np.ndarray, NewtonInfo]:
    """Damped Newton iteration with a banded-tridiagonal linear solve.

    ``system(v, need_jacobian)`` must return ``(residual, ab)`` where
    ``ab`` is the (1,1)-banded Jacobian (ignored when ``need_jacobian``
    is false).  Convergence is max-norm residual <= config.newton_tol;
    with line search enabled the update is halved up to 20 times while
    the residual norm fails to decrease.  Raises :class:`NewtonError`
    carrying the residual history on stagnation or iteration cap.
    """
    v = np.array(v0, dtype=float, copy=True)
    r, ab = system(v, True)
    norm = float(np.max(np.abs(r)))
    history = [norm]
    if norm <= config.newton_tol:
        return v, NewtonInfo(0, history)
    for it in range(1, config.newton_max_iter + 1):
        delta = solve_banded((1, 1), ab, -r)
        if config.line_search:
            alpha = 1.0
            for _ in range(_LINE_SEARCH_HALVINGS):
                trial = v + alpha * delta
                r_trial, _ = system(trial, False)
                trial_norm = float(np.max(np.abs(r_trial)))
                if np.isfinite(trial_norm) and trial_norm < norm:
                    break
                alpha *= 0.5
            else:
                raise NewtonError(
                    "Newton stagnated: no residual decrease after "
                    f"{_LINE_SEARCH_HALVINGS} halvings",
                    {"residual_history": history})
            v = trial
        else:
            v = v + delta
        r, ab = system(v, True)
        norm = float(np.max(np.abs(r)))
        if not np.isfinite(norm):
            raise NewtonError("Newton produced non-finite residual",
                              {"residual_history": history + [norm]})
        history.append(norm)
        if norm <= config.newton_tol:
            return v, NewtonInfo(it, history)
    raise NewtonError(
        f"Newton did not converge in {config.newton_max_iter} iterations",
        {"residual_history": history})


class _StepWorkspace:
    """Per-solve scratch: constant Jacobian part and inversion warm start."""

    def __init__(self, grid: Grid1D):
        n = grid.n_cells
        dx = grid.dx
        ab = np.zeros((3, n))
        ab[0, 1:] = -1.0 / dx
        ab[2, :-1] = -1.0 / dx
        ab[1, :] = 2.0 / dx
        ab[1, 0] = 1.0 / dx
        ab[1, -1] = 1.0 / dx
        self.ab_laplace = ab
        self.u_warm: np.ndarray | None = None


def _step_core(grid: Grid1D, v_n: np.ndarray, u_tilde: np.ndarray,
               t_next: float, dt: float, model: ConstitutiveModel,
               pres: PressureField, config: ApConfig,
               ws: _StepWorkspace, b_n: np.ndarray):
    """One implicit step in v; returns (v_next, u_next, fluxes, src, info)."""
    n, dx = grid.n_cells, grid.dx
    px_faces = np.asarray(pres.p_x(t_next, grid.faces), dtype=float)
    u_face = 0.5 * (u_tilde[1:] + u_tilde[:-1])
    g_int = np.asarray(model.lam(u_face), dtype=float) * px_faces[1:-1]
    tr_l, tr_r = grid.trace(u_tilde)
    flux_left = (float(model.lam(tr_l)) - 1.0) * px_faces[0]
    flux_right = (float(model.lam(tr_r)) - 1.0) * px_faces[-1]
    if config.source_term is not None:
        s_vals = np.asarray(config.source_term(t_next, grid.cell_centers), dtype=float)
    else:
        s_vals = np.zeros(n)
    scale = dx / dt
    state = {"u": ws.u_warm if ws.u_warm is not None else None}

    def system(v, need_jacobian):
        u = model.kirchhoff_inverse(v, x0=state["u"])
        state["u"] = u
        r = (np.asarray(model.psi(u), dtype=float) - b_n) * scale - dx * s_vals
        flux_int = (v[1:] - v[:-1]) / dx + g_int
        r[0] -= flux_int[0] - flux_left
        r[-1] -= flux_right - flux_int[-1]
        r[1:-1] -= flux_int[1:] - flux_int[:-1]
        if not need_jacobian:
            return r, None
        b_prime = np.asarray(model.psi_prime(u), dtype=float) \
            / np.asarray(model.lam(u), dtype=float)
        if np.any(b_prime <= 0.0):
            raise NumericsError("transformed storage slope must be positive")
        ab = ws.ab_laplace.copy()
        ab[1, :] += b_prime * scale
        return r, ab

    v_next, info = newton_solve(system, v_n, config)
    u_next = model.kirchhoff_inverse(v_next, x0=state["u"])
    ws.u_warm = u_next
    src_int = float(dx * s_vals.sum())
    return v_next, u_next, flux_left, flux_right, src_int, info


def step_ap(v_n: GridFunction, u_tilde_frame: GridFunction, t_next: float,
            dt: float, model: ConstitutiveModel, pres: PressureField,
            config: ApConfig | None = None) -> GridFunction:
    """Advance the transformed variable by one backward-Euler step.

    ``u_tilde_frame`` is the coupling field at the new time level.
    Raises :class:`StepError` (wrapping the Newton history) when the
    inner iteration fails; the caller may halve dt and retry.
    """
    config = config or ApConfig()
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    grid = v_n.grid
    if u_tilde_frame.grid != grid:
        raise ValueError("fields must share one grid")
    ws = _StepWorkspace(grid)
    b_n = np.asarray(model.psi(model.kirchhoff_inverse(v_n.values)), dtype=float)
    try:
        v_next, _, _, _, _, _ = _step_core(grid, v_n.values, u_tilde_frame.values,
                                           t_next, dt, model, pres, config, ws, b_n)
    except NewtonError as exc:
        raise StepError(f"implicit step at t={t_next:g} failed: {exc}",
                        step_index=0, t=t_next, cause=exc) from exc
    return GridFunction(grid, v_next)


def solve_ap(u0: GridFunction, u_tilde: Trajectory, window: TimeWindow,
             model: ConstitutiveModel, pres: PressureField,
             config: ApConfig | None = None
             ) -> tuple[Trajectory, Trajectory, MassLedger]:
    """Solve the frozen-coefficient problem over a window.

    Returns the potential trajectory u, the transformed trajectory
    v = K(u) (frame 0 is K(u0) exactly), and the mass ledger.  Step
    failures propagate as :class:`StepError` with the failing index.
    """
    config = config or ApConfig()
    grid = u0.grid
    if not u_tilde.covers(window):
        raise ValueError("coupling trajectory does not cover the window")
    n_steps = window.n_steps
    dt = window.dt
    ws = _StepWorkspace(grid)

    u_frames = np.empty((n_steps + 1, grid.n_cells))
    v_frames = np.empty_like(u_frames)
    u_frames[0] = u0.values
    v_frames[0] = np.asarray(model.kirchhoff(u0.values), dtype=float)
    ws.u_warm = u_frames[0].copy()

    masses = np.empty(n_steps + 1)
    masses[0] = grid.integrate(model.psi(u_frames[0]))
    t_arr = np.empty(n_steps)
    fl = np.empty(n_steps)
    fr = np.empty(n_steps)
    src = np.empty(n_steps)
    res = np.empty(n_steps)

    b_n = np.asarray(model.psi(u_frames[0]), dtype=float)
    for k in range(n_steps):
        t_next = window.t_start + (k + 1) * dt
        try:
            v_next, u_next, f_l, f_r, s_int, _ = _step_core(
                grid, v_frames[k], u_tilde.frames[k + 1], t_next, dt,
                model, pres, config, ws, b_n)
        except NewtonError as exc:
            raise StepError(f"step {k} (t={t_next:g}) failed: {exc}",
                            step_index=k, t=t_next, cause=exc) from exc
        v_frames[k + 1] = v_next
        u_frames[k + 1] = u_next
        b_n = np.asarray(model.psi(u_next), dtype=float)
        masses[k + 1] = grid.integrate(b_n)
        t_arr[k] = t_next
        fl[k] = f_l
        fr[k] = f_r
        src[k] = s_int
        res[k] = masses[k + 1] - masses[k] - dt * (f_r - f_l) - dt * s_int

    u_traj = Trajectory(grid, window.t_start, dt, u_frames)
    v_traj = Trajectory(grid, window.t_start, dt, v_frames)
    ledger = MassLedger(t=t_arr, masses=masses, flux_left=fl, flux_right=fr,
                        source_integral=src, residuals=res)
    return u_traj, v_traj, ledger


# ----------------------------------------------------------------------
# Serialisation
# ----------------------------------------------------------------------

def write_trajectory_csv(u: Trajectory, v: Trajectory,
                         model: ConstitutiveModel, path,
                         config_hash: str | None = None) -> None:
    """Dump frames as ``t,x,u,v,psi_u`` rows, 17 significant digits."""
    x = u.grid.cell_centers
    times = u.times
    psi_frames = np.asarray(model.psi(u.frames), dtype=float)
    lines = []
    if config_hash:
        lines.append(f"# config_sha256={config_hash}")
    lines.append("t,x,u,v,psi_u")
    for k, t in enumerate(times):
        for i in range(u.grid.n_cells):
            lines.append(f"{t:.17g},{x[i]:.17g},{u.frames[k, i]:.17g},"
                         f"{v.frames[k, i]:.17g},{psi_frames[k, i]:.17g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ledger_csv(ledger: MassLedger, path,
                     config_hash: str | None = None) -> None:
    """Dump the ledger as ``step,t,mass,flux_left,flux_right,residual`` rows."""
    lines = []
    if config_hash:
        lines.append(f"# config_sha256={config_hash}")
    lines.append("step,t,mass,flux_left,flux_right,residual")
    for k in range(len(ledger.residuals)):
        lines.append(f"{k + 1},{ledger.t[k]:.17g},{ledger.masses[k + 1]:.17g},"
                     f"{ledger.flux_left[k]:.17g},{ledger.flux_right[k]:.17g},"
                     f"{ledger.residuals[k]:.17g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
