"""Given pressure fields p(t, x) on [0, T] x [0, 1].

The solver never computes p; it consumes ``p_x`` (boundary data and
interior flux coefficient) and ``p_xx`` from a :class:`PressureField`,
either analytic (exact derivatives) or tabulated (cubic in x, linear in
t).  Evaluators take a scalar time and a vectorised position argument.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, IngestionError
from .grid import Grid1D, GridFunction

_SUP_LATTICE = 257  # lattice used for the cached sup of |p_x|


@dataclass(frozen=True, eq=False)
class PressureField:
    """Evaluators for p and its x-derivatives, plus boundary traces.

    ``h(t) = (p_x(t, 0), p_x(t, 1))`` is the boundary data of the
    transformed problem.  ``sup_px`` caches the sup of |p_x| over a
    dense lattice on [0, horizon] x [0, 1].
    """

    p: Callable
    p_x: Callable
    p_xx: Callable
    descriptor: str
    horizon: float
    sup_px: float = field(init=False)

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ConfigError(f"pressure horizon must be positive, got {self.horizon}")
        t = np.linspace(0.0, self.horizon, _SUP_LATTICE)
        x = np.linspace(0.0, 1.0, _SUP_LATTICE)
        sup = 0.0
        for tk in t:
            sup = max(sup, float(np.max(np.abs(self.p_x(float(tk), x)))))
        object.__setattr__(self, "sup_px", sup)

    def h(self, t: float) -> tuple[float, float]:
        """Boundary slope pair (p_x(t,0), p_x(t,1))."""
        ends = np.array([0.0, 1.0])
        px = np.asarray(self.p_x(float(t), ends), dtype=float)
        return float(px[0]), float(px[1])


def make_analytic_preset(name: str, params: dict | None = None,
                         horizon: float = 1.0) -> PressureField:
    """Analytic pressure presets with exact derivatives.

    ``zero``            p = 0
    ``linear_in_x``     p = slope * x              (params: slope)
    ``separable_sin``   p = a sin(omega t) cos(pi x)  (params: amplitude, omega)
    """
    params = dict(params or {})

    def take(key, default=None):
        if key in params:
            return float(params.pop(key))
        if default is None:
            raise ConfigError(f"pressure preset {name!r} requires parameter {key!r}")
        return float(default)

    if name == "zero":
        f = _broadcast_const(0.0)
        field_ = PressureField(p=f, p_x=f, p_xx=f, descriptor="analytic:zero",
                               horizon=horizon)
    elif name == "linear_in_x":
        s = take("slope")

        def p(t, x):
            return s * np.asarray(x, dtype=float)

        field_ = PressureField(p=p, p_x=_broadcast_const(s),
                               p_xx=_broadcast_const(0.0),
                               descriptor=f"analytic:linear_in_x(slope={s:g})",
                               horizon=horizon)
    elif name == "separable_sin":
        a = take("amplitude", 1.0)
        om = take("omega", 2.0 * math.pi)

        def p(t, x):
            return a * math.sin(om * t) * np.cos(math.pi * np.asarray(x, dtype=float))

        def p_x(t, x):
            return -a * math.pi * math.sin(om * t) * np.sin(math.pi * np.asarray(x, dtype=float))

        def p_xx(t, x):
            return -a * math.pi ** 2 * math.sin(om * t) * np.cos(math.pi * np.asarray(x, dtype=float))

        field_ = PressureField(p=p, p_x=p_x, p_xx=p_xx,
                               descriptor=f"analytic:separable_sin(a={a:g}, omega={om:g})",
                               horizon=horizon)
    else:
        raise ConfigError(f"unknown pressure preset {name!r}; "
                          "available: zero, linear_in_x, separable_sin")
    if params:
        raise ConfigError(f"unknown parameters for pressure preset {name!r}: "
                          f"{sorted(params)}")
    return field_


def _broadcast_const(value: float):
    def f(t, x):
        return np.full_like(np.asarray(x, dtype=float), value)
    return f


def ingest_tabulated(samples: Sequence[tuple[float, GridFunction]],
                     horizon: float | None = None) -> PressureField:
    """Build a field from time-ordered (t, GridFunction) samples.

    Cubic splines with natural end conditions in x (built on cell
    centers, evaluated on [0, 1]); piecewise-linear interpolation in t,
    which keeps the time derivative square-integrable without inventing
    smoothness the data does not have.
    """
    if len(samples) < 2:
        raise IngestionError("need at least 2 time samples")
    times = np.array([float(t) for t, _ in samples])
    if np.any(np.diff(times) <= 0.0):
        raise IngestionError("sample times must be strictly increasing")
    grid = samples[0][1].grid
    for _, f in samples:
        if f.grid != grid:
            raise IngestionError("all samples must share one grid")
    x_nodes = grid.cell_centers
    splines = [CubicSpline(x_nodes, f.values, bc_type="natural") for _, f in samples]
    d1 = [s.derivative(1) for s in splines]
    d2 = [s.derivative(2) for s in splines]

    def blend(parts, t, x):
        t = float(t)
        if t <= times[0]:
            return np.asarray(parts[0](x), dtype=float)
        if t >= times[-1]:
            return np.asarray(parts[-1](x), dtype=float)
        j = int(np.searchsorted(times, t, side="right") - 1)
        j = min(j, len(times) - 2)
        w = (t - times[j]) / (times[j + 1] - times[j])
        return (1.0 - w) * np.asarray(parts[j](x), dtype=float) \
            + w * np.asarray(parts[j + 1](x), dtype=float)

    return PressureField(
        p=lambda t, x: blend(splines, t, x),
        p_x=lambda t, x: blend(d1, t, x),
        p_xx=lambda t, x: blend(d2, t, x),
        descriptor=f"tabulated:{len(samples)}x{grid.n_cells}",
        horizon=float(horizon if horizon is not None else times[-1]),
    )


def read_tabulated_csv(path, horizon: float | None = None) -> PressureField:
    """Ingest a ``t,x,p`` CSV; the grid is inferred from the x column.

    Strict parsing: a header row is required, values must be finite,
    every time slice must cover the same cell centers of a uniform
    grid.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["t", "x", "p"]:
            raise IngestionError(f"{path}: expected header 't,x,p'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise IngestionError(f"{path}:{lineno}: expected 3 columns")
            try:
                t, x, p = (float(c) for c in row)
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from None
            if not (math.isfinite(t) and math.isfinite(x) and math.isfinite(p)):
                raise IngestionError(f"{path}:{lineno}: non-finite value")
            rows.append((t, x, p))
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    by_t: dict[float, list[tuple[float, float]]] = {}
    for t, x, p in rows:
        by_t.setdefault(t, []).append((x, p))
    times = sorted(by_t)
    first_x = np.array(sorted(x for x, _ in by_t[times[0]]))
    n = len(first_x)
    grid = Grid1D(n)
    if not np.allclose(first_x, grid.cell_centers, rtol=0.0, atol=1e-12):
        raise IngestionError(
            f"{path}: x values are not the cell centers of a uniform {n}-cell grid")
    samples = []
    for t in times:
        pts = sorted(by_t[t])
        xs = np.array([x for x, _ in pts])
        if len(xs) != n or not np.array_equal(xs, first_x):
            raise IngestionError(f"{path}: time slice t={t:g} has a mismatched grid")
        samples.append((t, GridFunction(grid, np.array([p for _, p in pts]))))
    return ingest_tabulated(samples, horizon=horizon)


@dataclass(frozen=True)
class RegularityReport:
    """Numerical time-regularity estimates at increasing resolution.

    ``levels`` holds, per refinement, the estimates of
    ``int |p_t|_H^2 dt``, ``int |p_txx|_H^2 dt`` and
    ``int (h_t(.,0)^2 + h_t(.,1)^2) dt``.  A quantity is flagged as
    divergent when it grows by about a factor 2 or more between
    successive refinements (an unresolved jump under linear time
    interpolation doubles the estimate per refinement exactly, so the
    threshold sits just under 2; convergent data approaches ratio 1).
    """

    levels: tuple[dict, ...]
    divergent: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.divergent


def regularity_report(field_: PressureField, T: float,
                      n_t: int = 64, n_x: int = 128,
                      refinements: int = 3) -> RegularityReport:
    """Estimate the time-regularity integrals under mesh refinement."""
    names = ("p_t_sq", "p_txx_sq", "h_t_sq")
    levels = []
    for level in range(refinements):
        mt = n_t * 2 ** level
        mx = n_x * 2 ** level
        dt = T / mt
        x = (np.arange(mx) + 0.5) / mx
        ends = np.array([0.0, 1.0])
        acc = dict.fromkeys(names, 0.0)
        prev = (np.asarray(field_.p(0.0, x), dtype=float),
                np.asarray(field_.p_xx(0.0, x), dtype=float),
                np.asarray(field_.p_x(0.0, ends), dtype=float))
        for k in range(1, mt + 1):
            cur = (np.asarray(field_.p(k * dt, x), dtype=float),
                   np.asarray(field_.p_xx(k * dt, x), dtype=float),
                   np.asarray(field_.p_x(k * dt, ends), dtype=float))
            dp = (cur[0] - prev[0]) / dt
            dpxx = (cur[1] - prev[1]) / dt
            dh = (cur[2] - prev[2]) / dt
            acc["p_t_sq"] += dt * float((dp * dp).sum() / mx)
            acc["p_txx_sq"] += dt * float((dpxx * dpxx).sum() / mx)
            acc["h_t_sq"] += dt * float((dh * dh).sum())
            prev = cur
        levels.append(acc)
    divergent = []
    for name in names:
        for a, b in zip(levels, levels[1:]):
            if a[name] > 1e-14 and b[name] / a[name] > 1.9:
                divergent.append(name)
                break
            if a[name] <= 1e-14 and b[name] > 1e-10:
                divergent.append(name)
                break
    return RegularityReport(tuple(levels), tuple(divergent))
