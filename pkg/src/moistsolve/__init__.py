"""Verified 1D solver for nonlinear moisture transport in porous materials.

The transport equation d/dt psi(u) = d/dx( lam(u) d/dx (u + p) ) with a
given pressure field p and the no-total-flux boundary condition is
solved in the conductivity-primitive variable by implicit finite
volumes, wrapped in a fixed-point iteration over the pressure-coupling
coefficient with adaptive time-window continuation.
"""

from .ap_solver import (ApConfig, MassLedger, TimeWindow, Trajectory,
                        newton_solve, solve_ap, step_ap)
from .constitutive import (AssumptionReport, ConstitutiveModel, MaterialPreset,
                           check_derivative_consistency, diffusivity,
                           make_preset, retention, validate_assumptions)
from .diagnostics import (EnergyTrace, dirichlet_energy, energy_trace,
                          lemma_property_suite)
from .errors import (ConfigError, DomainError, IngestionError, MarchError,
                     MoistsolveError, NewtonError, NumericsError,
                     PicardIterationError, StepError, WindowTooLargeError)
from .fixed_point import (ContractionStats, MarchResult, PicardConfig,
                          PicardReport, PicardResult, WindowSchedule,
                          estimate_contraction, gamma, l2x_norm,
                          march_windows, picard_solve)
from .grid import (Grid1D, GridFunction, boundary_trace,
                   check_sobolev_inequality, norm_H, norm_X)
from .pressure import (PressureField, ingest_tabulated, make_analytic_preset,
                       read_tabulated_csv, regularity_report)

__version__ = "0.1.0"

__all__ = [
    "ApConfig", "AssumptionReport", "ConfigError", "ConstitutiveModel",
    "ContractionStats", "DomainError", "EnergyTrace", "Grid1D", "GridFunction",
    "IngestionError", "MarchError", "MarchResult", "MassLedger",
    "MaterialPreset", "MoistsolveError", "NewtonError", "NumericsError",
    "PicardConfig", "PicardIterationError", "PicardReport", "PicardResult",
    "PressureField", "StepError", "TimeWindow", "Trajectory",
    "WindowSchedule", "WindowTooLargeError", "boundary_trace",
    "check_derivative_consistency", "check_sobolev_inequality",
    "diffusivity", "dirichlet_energy", "energy_trace", "estimate_contraction",
    "gamma", "ingest_tabulated", "l2x_norm", "lemma_property_suite",
    "make_analytic_preset", "make_preset", "march_windows", "newton_solve",
    "norm_H", "norm_X", "picard_solve", "read_tabulated_csv",
    "regularity_report", "retention", "solve_ap", "step_ap",
    "validate_assumptions",
]
