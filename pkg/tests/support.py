"""Shared ad-hoc material models and helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np

from moistsolve import ConstitutiveModel


def const_lam_model(c: float = 1.0, psi_shift: float = 10.0) -> ConstitutiveModel:
    """psi(u) = u + shift, lam == c; everything affine and closed-form."""
    return ConstitutiveModel(
        psi=lambda u: np.asarray(u, dtype=float) + psi_shift,
        lam=lambda u: np.full_like(np.asarray(u, dtype=float), c),
        psi_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        psi_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_prime=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        delta_psi=1.0, c_psi=1.0, delta_lam=c, c_lam=c,
        lam_antiderivative=lambda u: c * np.asarray(u, dtype=float),
        psi_antiderivative=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2
        + psi_shift * np.asarray(u, dtype=float),
        name=f"const-lam-{c:g}",
    )


def sin_lam_model(with_antiderivative: bool = True) -> ConstitutiveModel:
    """psi(u) = u + 10, lam(u) = 2 + sin(u)."""
    kwargs = {}
    if with_antiderivative:
        kwargs["lam_antiderivative"] = lambda u: 2.0 * np.asarray(u, dtype=float) \
            - np.cos(np.asarray(u, dtype=float))
    return ConstitutiveModel(
        psi=lambda u: np.asarray(u, dtype=float) + 10.0,
        lam=lambda u: 2.0 + np.sin(np.asarray(u, dtype=float)),
        psi_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        psi_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_prime=lambda u: np.cos(np.asarray(u, dtype=float)),
        lam_second=lambda u: -np.sin(np.asarray(u, dtype=float)),
        delta_psi=1.0, c_psi=1.0, delta_lam=1.0, c_lam=3.0,
        psi_antiderivative=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2
        + 10.0 * np.asarray(u, dtype=float),
        working_range=(-20.0, 20.0),
        name="sin-lam",
        **kwargs,
    )


def linear_psi_model() -> ConstitutiveModel:
    """psi(u) = 2u + 5, lam == 1; rho_hat has the closed form (r-5)^2/4."""
    return ConstitutiveModel(
        psi=lambda u: 2.0 * np.asarray(u, dtype=float) + 5.0,
        lam=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        psi_prime=lambda u: np.full_like(np.asarray(u, dtype=float), 2.0),
        psi_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_prime=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        delta_psi=2.0, c_psi=2.0, delta_lam=1.0, c_lam=1.0,
        lam_antiderivative=lambda u: np.asarray(u, dtype=float),
        psi_antiderivative=lambda u: np.asarray(u, dtype=float) ** 2
        + 5.0 * np.asarray(u, dtype=float),
        name="linear-psi",
    )


def heat_model() -> ConstitutiveModel:
    """psi(u) = u, lam == 1: the transformed equation is the heat equation."""
    return ConstitutiveModel(
        psi=lambda u: np.asarray(u, dtype=float),
        lam=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        psi_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        psi_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_prime=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        delta_psi=1.0, c_psi=1.0, delta_lam=1.0, c_lam=1.0,
        lam_antiderivative=lambda u: np.asarray(u, dtype=float),
        psi_antiderivative=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        name="heat",
    )


def tanh_b_model() -> ConstitutiveModel:
    """psi(u) = u + 0.5*tanh(u), lam == 1: b(v) = v + 0.5*tanh(v)."""
    return ConstitutiveModel(
        psi=lambda u: np.asarray(u, dtype=float) + 0.5 * np.tanh(np.asarray(u, dtype=float)),
        lam=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        psi_prime=lambda u: 1.0 + 0.5 / np.cosh(np.asarray(u, dtype=float)) ** 2,
        psi_second=lambda u: -np.tanh(np.asarray(u, dtype=float))
        / np.cosh(np.asarray(u, dtype=float)) ** 2,
        lam_prime=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        lam_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        delta_psi=1.0, c_psi=1.5, delta_lam=1.0, c_lam=1.0,
        lam_antiderivative=lambda u: np.asarray(u, dtype=float),
        name="tanh-b",
    )


def stiff_model() -> ConstitutiveModel:
    """Nearly degenerate conductivity (min 0.08): large coupling constants."""
    return ConstitutiveModel(
        psi=lambda u: np.asarray(u, dtype=float) + 60.0
        + 2.0 * np.tanh(np.asarray(u, dtype=float) / 4.0),
        lam=lambda u: 1.08 + np.sin(np.asarray(u, dtype=float)),
        psi_prime=lambda u: 1.0 + 0.5 / np.cosh(np.asarray(u, dtype=float) / 4.0) ** 2,
        psi_second=lambda u: -0.25 * np.tanh(np.asarray(u, dtype=float) / 4.0)
        / np.cosh(np.asarray(u, dtype=float) / 4.0) ** 2,
        lam_prime=lambda u: np.cos(np.asarray(u, dtype=float)),
        lam_second=lambda u: -np.sin(np.asarray(u, dtype=float)),
        delta_psi=1.0, c_psi=1.5, delta_lam=0.08, c_lam=2.2,
        lam_antiderivative=lambda u: 1.08 * np.asarray(u, dtype=float)
        - np.cos(np.asarray(u, dtype=float)),
        psi_antiderivative=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2
        + 60.0 * np.asarray(u, dtype=float)
        + 8.0 * log_cosh(np.asarray(u, dtype=float) / 4.0),
        name="stiff",
    )


def log_cosh(x):
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def cosine_field(grid, mean=1.0, amplitude=0.5):
    return mean + amplitude * np.cos(math.pi * grid.cell_centers)


def decaying_cosine(t, x):
    """The manufactured exact solution used across the verification tests."""
    return math.exp(-t) * np.cos(math.pi * np.asarray(x, dtype=float))


def decaying_cosine_source(model, pres):
    """Source term that makes decaying_cosine solve the coupled equation."""

    def source(t, x):
        x = np.asarray(x, dtype=float)
        us = decaying_cosine(t, x)
        ux = -math.pi * math.exp(-t) * np.sin(math.pi * x)
        uxx = -math.pi ** 2 * us
        lam_us = np.asarray(model.lam(us), dtype=float)
        lam_p = np.asarray(model.lam_prime(us), dtype=float)
        psi_p = np.asarray(model.psi_prime(us), dtype=float)
        px = np.asarray(pres.p_x(t, x), dtype=float)
        pxx = np.asarray(pres.p_xx(t, x), dtype=float)
        return (-psi_p * us - lam_p * ux * ux - lam_us * uxx
                - lam_p * ux * px - lam_us * pxx)

    return source
