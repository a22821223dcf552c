"""Computable monitors: energy traces and inequality property checks.

Monitors never abort a run; violations become WARN entries in the
report they belong to.  The discrete a-priori quantities tracked here
(the boundary-forced Dirichlet energy, the convex storage potential,
norm histories and the mass trace) are the solver's observable
counterparts of the estimates that make the fixed-point argument work,
so plots of an accepted run should show them bounded and tame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ap_solver import Trajectory
from .constitutive import ConstitutiveModel
from .grid import Grid1D, GridFunction, check_sobolev_inequality
from .pressure import PressureField


def dirichlet_energy(z: GridFunction, h0: float, h1: float) -> float:
    """Boundary-forced Dirichlet energy of a field.

    ``(1/2) int z_x^2 dx + h1*z(1) - h0*z(0)``, with the boundary
    values taken from the linear-extrapolation trace.
    """
    grid = z.grid
    g = grid.gradient(z.values)
    tr_l, tr_r = grid.trace(z.values)
    return float(0.5 * (g * g).sum() * grid.dx + h1 * tr_r - h0 * tr_l)


@dataclass
class EnergyTrace:
    """Per-frame solution functionals along a trajectory.

    ``phi`` is the boundary-forced Dirichlet energy of the transformed
    frames, ``lyapunov`` the integral of the convex storage potential,
    ``mass`` the stored-mass trace (bit-identical to the solver ledger
    on the same frames).
    """

    t: np.ndarray
    norm_h: np.ndarray
    grad_norm: np.ndarray
    sup: np.ndarray
    phi: np.ndarray
    lyapunov: np.ndarray
    mass: np.ndarray
    warnings: list[str] = field(default_factory=list)

    def write_csv(self, path, config_hash: str | None = None) -> None:
        lines = []
        if config_hash:
            lines.append(f"# config_sha256={config_hash}")
        lines.append("step,t,norm_H,norm_X_seminorm,sup,phi,lyapunov,mass")
        for k in range(len(self.t)):
            lines.append(f"{k},{self.t[k]:.17g},{self.norm_h[k]:.17g},"
                         f"{self.grad_norm[k]:.17g},{self.sup[k]:.17g},"
                         f"{self.phi[k]:.17g},{self.lyapunov[k]:.17g},"
                         f"{self.mass[k]:.17g}")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def energy_trace(u: Trajectory, model: ConstitutiveModel,
                 pres: PressureField) -> EnergyTrace:
    """Evaluate the monitor functionals on every frame of a trajectory.

    Also checks the frame-wise coercivity bound

        phi >= -2*sqrt(2)*|p_x|_inf*|K(u)|_H - 4*|p_x|_inf^2,

    emitting a WARN entry (never an exception) where it fails.
    """
    if u.frames.shape[0] < 1:
        raise ValueError("trajectory has no frames")
    grid = u.grid
    f = u.frames
    times = u.times
    v = np.asarray(model.kirchhoff(f.reshape(-1)), dtype=float).reshape(f.shape)

    norm_h = grid.norm_h(f)
    grad_norm = grid.norm_h(grid.gradient(f))
    tr_l, tr_r = grid.trace(f)
    sup = np.maximum(np.max(np.abs(f), axis=-1),
                     np.maximum(np.abs(tr_l), np.abs(tr_r)))

    gv = grid.gradient(v)
    vtr_l, vtr_r = grid.trace(v)
    v_norm_h = grid.norm_h(v)
    h_pairs = np.array([pres.h(float(t)) for t in times])
    phi = (0.5 * (gv * gv).sum(axis=-1) * grid.dx
           + h_pairs[:, 1] * vtr_r - h_pairs[:, 0] * vtr_l)

    lyapunov = grid.integrate(model.rho_hat_of_psi(f))
    mass = grid.integrate(np.asarray(model.psi(f), dtype=float))

    warnings = []
    sup_px = pres.sup_px
    floor = -2.0 * math.sqrt(2.0) * sup_px * v_norm_h - 4.0 * sup_px ** 2
    bad = np.nonzero(phi < floor)[0]
    for k in bad:
        warnings.append(f"WARN frame {k} (t={times[k]:.6g}): phi={phi[k]:.6g} "
                        f"below coercivity floor {floor[k]:.6g}")
    return EnergyTrace(t=times, norm_h=np.asarray(norm_h, dtype=float),
                       grad_norm=np.asarray(grad_norm, dtype=float),
                       sup=sup, phi=phi, lyapunov=np.asarray(lyapunov, dtype=float),
                       mass=np.asarray(mass, dtype=float), warnings=warnings)


# ----------------------------------------------------------------------
# Property suite
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PropertyEntry:
    name: str
    passed: bool
    margin: float
    detail: str
    informational: bool = False


@dataclass(frozen=True)
class PropertyReport:
    entries: tuple[PropertyEntry, ...]
    n_random: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(e.passed or e.informational for e in self.entries)

    def lines(self) -> list[str]:
        out = []
        for e in self.entries:
            status = "pass" if e.passed else ("warn" if e.informational else "FAIL")
            out.append(f"{e.name:>26s}: {status}  margin={e.margin:.6e}  {e.detail}")
        return out


def _random_smooth_fields(rng: np.random.Generator, grid: Grid1D,
                          count: int) -> np.ndarray:
    """Truncated Fourier fields with decaying random coefficients."""
    modes = 6
    x = grid.cell_centers
    basis = np.stack([np.cos(m * math.pi * x) for m in range(modes)])
    coeff = rng.normal(0.0, 1.0, (count, modes)) / (1.0 + np.arange(modes)) ** 2
    scale = rng.uniform(0.1, 3.0, (count, 1))
    return scale * (coeff @ basis)


def lemma_property_suite(model: ConstitutiveModel, grid: Grid1D,
                         n_random: int, seed: int = 0,
                         u_range=None) -> PropertyReport:
    """Run the inequality predicates on randomized inputs.

    Covers the discrete sup/L4 embedding bounds on random smooth
    fields, the two-sided linear growth of the conductivity primitive,
    the strong monotonicity and Lipschitz bounds of the inverse
    transformed storage map, and the quadratic lower bound of the
    convex storage potential.  Failures are report entries, not
    exceptions.
    """
    if n_random < 1:
        raise ValueError("n_random must be at least 1")
    rng = np.random.default_rng(seed)
    lo, hi = u_range if u_range is not None else model.working_range
    entries = []

    # Discrete embedding inequalities on random smooth fields.
    fields = _random_smooth_fields(rng, grid, n_random)
    sup_margin = math.inf
    l4_margin = math.inf
    for row in fields:
        rep = check_sobolev_inequality(GridFunction(grid, row))
        sup_margin = min(sup_margin, rep.sup_margin)
        l4_margin = min(l4_margin, rep.l4_margin)
    entries.append(PropertyEntry(
        "embedding_sup", sup_margin >= 0.0, float(sup_margin),
        f"{n_random} random smooth fields on {grid.n_cells} cells"))
    entries.append(PropertyEntry(
        "embedding_l4", l4_margin >= 0.0, float(l4_margin),
        f"{n_random} random smooth fields on {grid.n_cells} cells"))

    # Two-sided linear growth of the conductivity primitive.
    u = rng.uniform(lo, hi, n_random)
    khat = np.abs(np.asarray(model.kirchhoff(u), dtype=float))
    au = np.abs(u)
    lower = khat - model.delta_lam * au
    upper = model.c_lam * au - khat
    entries.append(PropertyEntry(
        "kirchhoff_growth_lower", bool(np.min(lower) >= -1e-12), float(np.min(lower)),
        f"delta_lam*|u| <= |K(u)| at {n_random} points in [{lo:g}, {hi:g}]"))
    entries.append(PropertyEntry(
        "kirchhoff_growth_upper", bool(np.min(upper) >= -1e-12), float(np.min(upper)),
        f"|K(u)| <= C_lam*|u| at {n_random} points"))

    # Strong monotonicity / Lipschitz bounds of the inverse storage map.
    u_pairs = rng.uniform(lo, hi, (2, n_random))
    z = np.asarray(model.psi(u_pairs[0]), dtype=float)
    z1 = np.asarray(model.psi(u_pairs[1]), dtype=float)
    keep = np.abs(z - z1) > 1e-9 * np.maximum(1.0, np.abs(z))
    z, z1 = z[keep], z1[keep]
    bz = np.asarray(model.b_inverse(z), dtype=float)
    bz1 = np.asarray(model.b_inverse(z1), dtype=float)
    dz = z - z1
    db = bz - bz1
    c0 = float(np.min(db * dz / (db * db)))
    c0_prime = float(np.min(np.abs(db) / np.abs(dz)))
    lipschitz = float(np.max(np.abs(db) / np.abs(dz)))
    lip_bound = model.c_lam / model.delta_psi + 1e-6
    entries.append(PropertyEntry(
        "inverse_storage_monotone", c0 > 0.0, c0,
        f"measured C0={c0:.4g} over {int(keep.sum())} pairs"))
    entries.append(PropertyEntry(
        "inverse_storage_coercive", c0_prime > 0.0, c0_prime,
        f"measured C0'={c0_prime:.4g}"))
    entries.append(PropertyEntry(
        "inverse_storage_lipschitz", lipschitz <= lip_bound,
        float(lip_bound - lipschitz),
        f"measured L={lipschitz:.4g}, bound {lip_bound:.4g}"))

    # Quadratic lower bound of the convex storage potential.
    u_q = rng.uniform(lo, hi, n_random)
    rh = np.asarray(model.rho_hat_of_psi(u_q), dtype=float)
    factor = 2.0 * model.c_psi / model.delta_psi ** 2
    margin = factor * rh - u_q ** 2
    entries.append(PropertyEntry(
        "storage_potential_lower", bool(np.min(margin) >= -1e-10), float(np.min(margin)),
        f"(2C_psi/delta_psi^2) rho_hat(psi(u)) >= u^2 at {n_random} points"))

    # Upper bound of the potential; informational (its stated constant is
    # vacuous, but the affine-quadratic growth itself is worth recording).
    upper_margin = 0.5 * model.c_psi * (u_q ** 2 + 1.0) - rh
    entries.append(PropertyEntry(
        "storage_potential_upper", bool(np.min(upper_margin) >= -1e-10),
        float(np.min(upper_margin)),
        "rho_hat(psi(u)) <= (C_psi/2)(u^2+1); informational", informational=True))

    return PropertyReport(tuple(entries), n_random, seed)
