"""Monitors: boundary-forced Dirichlet energy, traces, inequality suite."""

import math

import numpy as np
import pytest

from moistsolve import (Grid1D, GridFunction, PicardConfig, TimeWindow,
                        Trajectory, dirichlet_energy, energy_trace,
                        lemma_property_suite, make_analytic_preset,
                        march_windows, picard_solve, solve_ap)
from moistsolve.constitutive import ConstitutiveModel

from support import decaying_cosine, decaying_cosine_source
from moistsolve.ap_solver import ApConfig


class TestDirichletEnergy:
    def test_constant_field(self):
        g = Grid1D(32)
        z = GridFunction(g, np.full(32, 3.0))
        assert dirichlet_energy(z, h0=1.0, h1=2.5) == pytest.approx(3.0 * 1.5,
                                                                    rel=1e-12)

    def test_linear_field_zero_data(self):
        g = Grid1D(256)
        z = GridFunction(g, g.cell_centers.copy())
        assert dirichlet_energy(z, 0.0, 0.0) == pytest.approx(0.5, abs=2e-3)

    def test_linear_field_with_boundary_data(self):
        g = Grid1D(256)
        z = GridFunction(g, g.cell_centers.copy())
        # 1/2 + 2*z(1) - 1*z(0) = 1/2 + 2
        assert dirichlet_energy(z, 1.0, 2.0) == pytest.approx(2.5, abs=2e-3)


class TestEnergyTrace:
    def test_constant_run_is_flat(self, synthetic_a, zero_pressure, grid64):
        window = TimeWindow(0.0, 0.01, 20)
        u0 = GridFunction(grid64, np.full(64, 1.5))
        u_tilde = Trajectory.constant(grid64, window, u0.values)
        u, _, _ = solve_ap(u0, u_tilde, window, synthetic_a.model, zero_pressure)
        trace = energy_trace(u, synthetic_a.model, zero_pressure)
        assert np.all(trace.phi == 0.0)
        assert np.all(trace.mass == trace.mass[0])
        assert np.all(trace.sup == 1.5)
        assert not trace.warnings

    def test_mass_matches_ledger_bitwise(self, synthetic_a, sin_pressure,
                                         grid64, u0_cosine):
        window = TimeWindow(0.0, 0.005, 40)
        u_tilde = Trajectory.constant(grid64, window, u0_cosine.values)
        u, _, ledger = solve_ap(u0_cosine, u_tilde, window, synthetic_a.model,
                                sin_pressure)
        trace = energy_trace(u, synthetic_a.model, sin_pressure)
        assert np.array_equal(trace.mass, ledger.masses)

    def test_coercivity_floor_on_accepted_run(self, synthetic_a, sin_pressure,
                                              grid64, u0_cosine):
        result = march_windows(u0_cosine, 1.0, 0.005, synthetic_a.model,
                               sin_pressure,
                               PicardConfig(initial_window=0.1, window_min=0.01))
        trace = energy_trace(result.u, synthetic_a.model, sin_pressure)
        assert not trace.warnings

    def test_phi_bounded_by_gradient_envelope(self, synthetic_a, sin_pressure,
                                              grid64, u0_cosine):
        # phi <= (C_lam^2/2) M + |p_x|_inf (sqrt(2)|v|_H + |v_x|_H) frame-wise
        window = TimeWindow(0.0, 0.005, 20)
        result = picard_solve(u0_cosine, window, synthetic_a.model, sin_pressure)
        trace = energy_trace(result.u, synthetic_a.model, sin_pressure)
        model = synthetic_a.model
        m_obs = result.report.m_observed
        v = np.asarray(model.kirchhoff(result.u.frames.reshape(-1))
                       ).reshape(result.u.frames.shape)
        vh = grid64.norm_h(v)
        vx = grid64.norm_h(grid64.gradient(v))
        bound = (0.5 * model.c_lam ** 2 * m_obs
                 + sin_pressure.sup_px * (math.sqrt(2.0) * vh + vx))
        assert np.all(trace.phi <= bound * (1.0 + 1e-9) + 1e-12)

    def test_storage_potential_dominates_norm(self, synthetic_a, sin_pressure,
                                              grid64, u0_cosine):
        # frame-wise: int rho_hat(psi(u)) >= (delta_psi^2 / 2 C_psi) |u|_H^2
        window = TimeWindow(0.0, 0.005, 40)
        u_tilde = Trajectory.constant(grid64, window, u0_cosine.values)
        u, _, _ = solve_ap(u0_cosine, u_tilde, window, synthetic_a.model,
                           sin_pressure)
        trace = energy_trace(u, synthetic_a.model, sin_pressure)
        model = synthetic_a.model
        factor = model.delta_psi ** 2 / (2.0 * model.c_psi)
        assert np.all(trace.lyapunov >= factor * trace.norm_h ** 2 - 1e-12)

    def test_manufactured_norm_history(self, synthetic_a):
        model = synthetic_a.model
        pres = make_analytic_preset("separable_sin",
                                    {"amplitude": 1.0, "omega": 2.0 * math.pi},
                                    horizon=0.5)
        grid = Grid1D(128)
        window = TimeWindow(0.0, 1e-3, 500)
        times = window.times()
        exact = np.stack([decaying_cosine(float(t), grid.cell_centers)
                          for t in times])
        config = ApConfig(source_term=decaying_cosine_source(model, pres))
        u, _, _ = solve_ap(GridFunction(grid, exact[0]),
                           Trajectory(grid, 0.0, window.dt, exact),
                           window, model, pres, config)
        trace = energy_trace(u, model, pres)
        # |u*(t)|_H = exp(-t)/sqrt(2)
        expected = np.exp(-times) / math.sqrt(2.0)
        assert np.max(np.abs(trace.norm_h - expected)) < 2e-3

    def test_empty_trajectory_rejected(self, synthetic_a, zero_pressure):
        g = Grid1D(8)
        with pytest.raises(ValueError):
            energy_trace(Trajectory(g, 0.0, 0.1, np.empty((0, 8))),
                         synthetic_a.model, zero_pressure)


class TestLemmaPropertySuite:
    def test_synthetic_a_passes(self, synthetic_a):
        report = lemma_property_suite(synthetic_a.model, Grid1D(512),
                                      n_random=1000, seed=1)
        assert report.passed
        names = {e.name for e in report.entries}
        assert {"embedding_sup", "embedding_l4", "kirchhoff_growth_lower",
                "kirchhoff_growth_upper", "inverse_storage_monotone",
                "inverse_storage_coercive", "inverse_storage_lipschitz",
                "storage_potential_lower"} <= names

    def test_degenerate_conductivity_flagged(self):
        # lam touches zero at -pi/2 while delta_lam claims 1: the primitive
        # growth bound must fail
        model = ConstitutiveModel(
            psi=lambda u: np.asarray(u, dtype=float) + 30.0,
            lam=lambda u: 1.0 + np.sin(np.asarray(u, dtype=float)),
            psi_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
            psi_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
            lam_prime=lambda u: np.cos(np.asarray(u, dtype=float)),
            lam_second=lambda u: -np.sin(np.asarray(u, dtype=float)),
            delta_psi=1.0, c_psi=1.0, delta_lam=1.0, c_lam=2.0,
            lam_antiderivative=lambda u: np.asarray(u, dtype=float)
            - np.cos(np.asarray(u, dtype=float)),
            working_range=(-10.0, 10.0), name="degenerate-lam")
        report = lemma_property_suite(model, Grid1D(64), n_random=500, seed=2)
        by_name = {e.name: e for e in report.entries}
        assert not by_name["kirchhoff_growth_lower"].passed
        assert not report.passed

    def test_zero_random_inputs_rejected(self, synthetic_a):
        with pytest.raises(ValueError):
            lemma_property_suite(synthetic_a.model, Grid1D(64), n_random=0)

    def test_determinism(self, synthetic_a):
        a = lemma_property_suite(synthetic_a.model, Grid1D(64), 50, seed=9)
        b = lemma_property_suite(synthetic_a.model, Grid1D(64), 50, seed=9)
        assert a == b
