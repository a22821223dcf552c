"""Uniform cell-centered mesh on (0,1), discrete norms and embeddings.

The layout is finite-volume: ``n_cells`` cells of width ``dx = 1/n``,
centers at ``(i+1/2)*dx``.  The discrete gradient averages face
differences onto cells, which makes it central in the interior and
one-sided in the two boundary cells, and keeps it consistent with the
flux discretisation of the time stepper.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on (0, 1) with at least 4 cells."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 4:
            raise ConfigError(f"need at least 4 cells, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx

    # All array routines accept either a single field of shape (n,) or a
    # stack of fields of shape (..., n) and act on the last axis.

    def integrate(self, values) -> float | np.ndarray:
        """Midpoint quadrature of a cell field over (0, 1)."""
        v = np.asarray(values, dtype=float)
        return v.sum(axis=-1) * self.dx

    def gradient(self, values) -> np.ndarray:
        """Face differences averaged onto cells; exact on linear fields."""
        v = np.asarray(values, dtype=float)
        g = np.empty_like(v)
        g[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2.0 * self.dx)
        g[..., 0] = (v[..., 1] - v[..., 0]) / self.dx
        g[..., -1] = (v[..., -1] - v[..., -2]) / self.dx
        return g

    def norm_h(self, values) -> float | np.ndarray:
        """Discrete L2(0,1) norm: sqrt(sum v_i^2 dx)."""
        v = np.asarray(values, dtype=float)
        return np.sqrt((v * v).sum(axis=-1) * self.dx)

    def norm_x(self, values) -> float | np.ndarray:
        """Discrete H1(0,1) norm: sqrt(|v|_H^2 + |Dv|_H^2)."""
        v = np.asarray(values, dtype=float)
        g = self.gradient(v)
        return np.sqrt(((v * v).sum(axis=-1) + (g * g).sum(axis=-1)) * self.dx)

    def trace(self, values) -> tuple:
        """Boundary values by linear extrapolation from the two nearest cells."""
        v = np.asarray(values, dtype=float)
        left = 1.5 * v[..., 0] - 0.5 * v[..., 1]
        right = 1.5 * v[..., -1] - 0.5 * v[..., -2]
        return left, right


@dataclass(frozen=True)
class GridFunction:
    """A real field on the cells of a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ConfigError(
                f"field has shape {v.shape}, expected ({self.grid.n_cells},)")
        if not np.all(np.isfinite(v)):
            raise ConfigError("field contains non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid1D, fn) -> "GridFunction":
        return cls(grid, np.asarray(fn(grid.cell_centers), dtype=float))


def norm_H(f: GridFunction) -> float:
    """L2 norm of a grid function (midpoint quadrature)."""
    return float(f.grid.norm_h(f.values))


def norm_X(f: GridFunction) -> float:
    """H1 norm of a grid function (L2 norm plus discrete-gradient L2 norm)."""
    return float(f.grid.norm_x(f.values))


def boundary_trace(f: GridFunction) -> tuple[float, float]:
    """(f(0+), f(1-)) by second-order linear extrapolation."""
    left, right = f.grid.trace(f.values)
    return float(left), float(right)


@dataclass(frozen=True)
class EmbeddingReport:
    """Margins of the discrete sup-norm and L4 embedding inequalities."""

    sup_margin: float
    l4_margin: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.sup_margin >= 0.0 and self.l4_margin >= 0.0


def check_sobolev_inequality(f: GridFunction) -> EmbeddingReport:
    """Verify the 1D embedding bounds on a discrete field.

    Checks ``max|f|^2 <= |f|_H^2 + 2 |f|_H |f_x|_H + tol(dx)`` and the
    corresponding L4 bound ``|f|_L4^4 <= (|f|_H^2 + 2|f|_H|f_x|_H)^2 +
    tol(dx)``, with quadrature slack ``tol(dx) = 10 * dx * |f|_X^2``;
    the continuous inequalities hold exactly, the slack absorbs
    midpoint-rule error on rough discrete data.
    """
    grid = f.grid
    if grid.n_cells < 8:
        raise ConfigError("embedding check needs at least 8 cells")
    v = f.values
    nh = float(grid.norm_h(v))
    ng = float(grid.norm_h(grid.gradient(v)))
    nx2 = nh * nh + ng * ng
    tol = 10.0 * grid.dx * nx2
    bound = nh * nh + 2.0 * nh * ng

    left, right = grid.trace(v)
    sup2 = float(max(np.max(np.abs(v)), abs(left), abs(right))) ** 2
    sup_margin = bound + tol - sup2

    l4 = float((v ** 4).sum() * grid.dx)
    l4_margin = bound * bound + tol - l4
    return EmbeddingReport(sup_margin=float(sup_margin),
                           l4_margin=float(l4_margin), tolerance=float(tol))


def write_csv(f: GridFunction, path, config_hash: str | None = None) -> None:
    """Serialise a grid function as ``x,value`` rows (17 significant digits)."""
    lines = []
    if config_hash:
        lines.append(f"# config_sha256={config_hash}")
    lines.append("x,value")
    for x, v in zip(f.grid.cell_centers, f.values):
        lines.append(f"{x:.17g},{v:.17g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
