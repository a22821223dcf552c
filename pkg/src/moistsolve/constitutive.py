"""Constitutive layer: storage and conductivity nonlinearities.

A :class:`ConstitutiveModel` bundles the storage curve ``psi`` (stored
water mass per unit volume as a function of the potential ``u``), the
conductivity ``lam``, their analytic derivatives, and the two-sided
bound constants

    delta_psi <= psi' <= C_psi,  |psi''| <= C_psi,  psi > 0,
    delta_lam <= lam  <= C_lam,  |lam'|, |lam''| <= C_lam,

which every solver routine relies on.  On top of the raw curves the
model exposes the derived map family used by the transformed solver:

``kirchhoff``
    the conductivity primitive  v = K(u) = int_0^u lam(r) dr,
``kirchhoff_inverse``
    its global inverse (safeguarded Newton, bracket from the slope
    bounds),
``b`` / ``b_inverse``
    the transformed storage curve b(v) = psi(K^{-1}(v)) and its inverse,
``rho`` / ``rho_hat``
    the inverse storage curve rho = psi^{-1} and its convex primitive
    rho_hat(r) = int_{psi(0)}^r rho(s) ds.

Two material presets ship with the package:

``synthetic-A``
    a fully analytic test material whose bound constants hold globally
    with margin and whose primitives are closed-form;
``paper-regularized``
    brick moisture curves (retention + capillary diffusivity) in a
    log-potential coordinate, argument-clamped and slope/floor
    regularised so the two-sided bounds above hold on the documented
    working range.

All curve evaluators are vectorised and pure; models are immutable
after construction, so they may be shared freely between concurrent
solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np
import numpy.polynomial.chebyshev as npcheb
from scipy.integrate import quad
from scipy.special import expit

from .errors import ConfigError, DomainError, NumericsError
from .rootfind import invert_monotone

_LN10 = math.log(10.0)

# Interpolant acceptance threshold for the cached conductivity primitive.
_KIRCHHOFF_CACHE_TOL = 1e-11
_KIRCHHOFF_CACHE_DEGREES = (64, 128, 256, 512, 1024)


# ----------------------------------------------------------------------
# Raw material curves (brick masonry moisture data)
# ----------------------------------------------------------------------

def diffusivity(psi_w):
    """Capillary diffusivity of the brick material at water content psi_w.

    ``D(psi_w) = 30.332e-6 * exp(79.8 * psi_w**1.5)``; tiny when dry and
    sharply increasing once the water content passes a threshold.

    Raises :class:`DomainError` for negative water content.
    """
    pw = np.asarray(psi_w, dtype=float)
    if np.any(pw < 0.0):
        raise DomainError("diffusivity requires water content >= 0")
    out = 30.332e-6 * np.exp(79.8 * pw ** 1.5)
    return float(out) if np.ndim(psi_w) == 0 else out


def retention(mu):
    """Water retention curve: volumetric water content at potential mu < 0.

    ``psi_w(mu) = 0.0505 / (8 + exp(log10(-mu) - 2))
                + 0.139 / (1.1 + exp(2.3*log10(-mu) - 4.6))``

    Bounded, strictly increasing in mu.  Raises :class:`DomainError`
    for mu >= 0 (the log of the suction is undefined there).
    """
    m = np.asarray(mu, dtype=float)
    if np.any(m >= 0.0):
        raise DomainError("retention curve requires a strictly negative potential")
    s = np.log10(-m)
    with np.errstate(over="ignore"):
        out = _ret_value(s)
    return float(out) if np.ndim(mu) == 0 else out


# Retention curve in the log-suction coordinate s = log10(-mu):
# a sum of shifted logistic-type terms c / (k + exp(a*s + b)).
_RET_TERMS = ((0.0505, 8.0, 1.0, -2.0), (0.139, 1.1, 2.3, -4.6))


def _ret_value(s):
    s = np.asarray(s, dtype=float)
    return sum(c / (k + np.exp(a * s + b)) for c, k, a, b in _RET_TERMS)


def _ret_d1(s):
    s = np.asarray(s, dtype=float)
    out = 0.0
    for c, k, a, b in _RET_TERMS:
        e = np.exp(a * s + b)
        out = out - c * a * e / (k + e) ** 2
    return out


def _ret_d2(s):
    s = np.asarray(s, dtype=float)
    out = 0.0
    for c, k, a, b in _RET_TERMS:
        e = np.exp(a * s + b)
        out = out - c * a * a * e * (k - e) / (k + e) ** 3
    return out


def _ret_d3(s):
    s = np.asarray(s, dtype=float)
    out = 0.0
    for c, k, a, b in _RET_TERMS:
        e = np.exp(a * s + b)
        out = out - c * a ** 3 * e * (k * k - 4.0 * k * e + e * e) / (k + e) ** 4
    return out


# ----------------------------------------------------------------------
# Model container
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstitutiveModel:
    """Immutable bundle of the model nonlinearities and their bounds.

    Parameters
    ----------
    psi, lam
        Storage curve and conductivity, vectorised ``R -> R``.
    psi_prime, psi_second, lam_prime, lam_second
        Analytic derivatives of the two curves.
    delta_psi, c_psi, delta_lam, c_lam
        The two-sided bound constants (see module docstring).
    lam_antiderivative
        Optional closed-form primitive of ``lam``; when absent the
        conductivity primitive is evaluated by adaptive quadrature
        behind a Chebyshev interpolant cached on ``working_range``
        (max interpolation error below 1e-10).
    psi_antiderivative
        Optional closed-form primitive of ``psi`` (speeds up
        ``rho_hat``); quadrature otherwise.
    working_range
        Default validation/sampling interval for the potential.
    """

    psi: Callable
    lam: Callable
    psi_prime: Callable
    psi_second: Callable
    lam_prime: Callable
    lam_second: Callable
    delta_psi: float
    c_psi: float
    delta_lam: float
    c_lam: float
    lam_antiderivative: Callable | None = None
    psi_antiderivative: Callable | None = None
    working_range: tuple[float, float] = (-50.0, 50.0)
    name: str = "custom"

    def __post_init__(self):
        for label, value in (("delta_psi", self.delta_psi), ("c_psi", self.c_psi),
                             ("delta_lam", self.delta_lam), ("c_lam", self.c_lam)):
            if not (value > 0.0 and math.isfinite(value)):
                raise ConfigError(f"{label} must be a positive finite number, got {value}")
        if self.delta_psi > self.c_psi or self.delta_lam > self.c_lam:
            raise ConfigError("lower bound constants must not exceed the upper ones")
        lo, hi = self.working_range
        if not lo < hi:
            raise ConfigError(f"working_range must be an increasing interval, got {self.working_range}")

    @property
    def origin(self) -> float:
        """The storage value with rho(origin) = 0, i.e. psi(0)."""
        return float(self.psi(0.0))

    # -- conductivity primitive ------------------------------------------------

    @cached_property
    def _kirchhoff_cache(self):
        """Chebyshev interpolant of the conductivity primitive on working_range."""
        lo, hi = self.working_range

        def direct(u: float) -> float:
            val, _ = quad(self.lam, 0.0, u, epsabs=1e-13, epsrel=1e-13, limit=500)
            return val

        def direct_vec(us):
            return np.array([direct(float(u)) for u in np.atleast_1d(us)])

        probes = np.linspace(lo, hi, 37)
        for degree in _KIRCHHOFF_CACHE_DEGREES:
            cheb = npcheb.Chebyshev.interpolate(direct_vec, degree, domain=[lo, hi])
            err = float(np.max(np.abs(cheb(probes) - direct_vec(probes))))
            if err < _KIRCHHOFF_CACHE_TOL:
                return cheb, float(cheb(lo)), float(cheb(hi))
        raise NumericsError(
            "conductivity primitive interpolant did not reach tolerance",
            {"last_error": err, "working_range": self.working_range})

    def kirchhoff(self, u):
        """Conductivity primitive K(u) = int_0^u lam(r) dr.

        Strictly increasing with K(0) = 0 and delta_lam*|u| <= |K(u)|
        <= C_lam*|u|.  Uses the closed-form primitive when the model
        provides one, otherwise the cached interpolant; outside the
        working range the tail integral is anchored at the nearest cache
        edge (root-find probes may reach far outside, where the
        integrand is tame and the quadrature cheap).
        """
        if self.lam_antiderivative is not None:
            anti = self.lam_antiderivative
            out = np.asarray(anti(u), dtype=float) - float(anti(0.0))
            return float(out) if np.ndim(u) == 0 else out
        cheb, k_lo, k_hi = self._kirchhoff_cache
        uu = np.atleast_1d(np.asarray(u, dtype=float))
        out = cheb(uu)
        lo, hi = self.working_range
        outside = (uu < lo) | (uu > hi)
        if np.any(outside):
            for i in np.nonzero(outside)[0]:
                ui = float(uu[i])
                edge, k_edge = (lo, k_lo) if ui < lo else (hi, k_hi)
                tail, _ = quad(self.lam, edge, ui,
                               epsabs=1e-13, epsrel=1e-13, limit=500)
                out[i] = k_edge + tail
        return float(out[0]) if np.ndim(u) == 0 else out

    def kirchhoff_inverse(self, v, x0=None):
        """Inverse of the conductivity primitive (global, safeguarded Newton).

        Satisfies ``|K(K^{-1}(v)) - v| <= max(1e-12, 1e-12*|v|)``.
        ``x0`` optionally warm-starts the iteration.  Raises
        :class:`NumericsError` with diagnostics on non-convergence.
        """
        return invert_monotone(self.kirchhoff, self.lam, v,
                               self.delta_lam, self.c_lam, x0=x0)

    # -- transformed storage curve ----------------------------------------------

    def b(self, v):
        """Transformed storage curve b(v) = psi(K^{-1}(v)); strictly increasing."""
        return self.psi(self.kirchhoff_inverse(v))

    def b_inverse(self, z):
        """Inverse of ``b``: b^{-1}(z) = K(psi^{-1}(z)); strictly increasing."""
        u = invert_monotone(self.psi, self.psi_prime, z,
                            self.delta_psi, self.c_psi)
        return self.kirchhoff(u)

    # -- inverse storage curve and its convex primitive --------------------------

    def rho(self, r):
        """Inverse storage curve rho = psi^{-1}."""
        try:
            return invert_monotone(self.psi, self.psi_prime, r,
                                   self.delta_psi, self.c_psi)
        except NumericsError as exc:
            raise DomainError(
                f"value not representable by the storage curve: {exc}") from exc

    @cached_property
    def _psi_primitive_cache(self):
        """Chebyshev interpolant of int_0^w psi on working_range."""
        lo, hi = self.working_range

        def direct(w: float) -> float:
            val, _ = quad(self.psi, 0.0, w, epsabs=1e-12, epsrel=1e-12, limit=500)
            return val

        def direct_vec(ws):
            return np.array([direct(float(w)) for w in np.atleast_1d(ws)])

        probes = np.linspace(lo, hi, 37)
        for degree in _KIRCHHOFF_CACHE_DEGREES:
            cheb = npcheb.Chebyshev.interpolate(direct_vec, degree, domain=[lo, hi])
            err = float(np.max(np.abs(cheb(probes) - direct_vec(probes))))
            if err < 1e-10 * max(1.0, float(np.max(np.abs(direct_vec(probes))))):
                return cheb, float(cheb(lo)), float(cheb(hi))
        raise NumericsError("storage primitive interpolant did not reach tolerance",
                            {"last_error": err})

    def _psi_primitive(self, w):
        """int_0^w psi(t) dt, closed form when available."""
        if self.psi_antiderivative is not None:
            anti = self.psi_antiderivative
            out = np.asarray(anti(w), dtype=float) - float(anti(0.0))
            return float(out) if np.ndim(w) == 0 else out
        cheb, p_lo, p_hi = self._psi_primitive_cache
        ww = np.atleast_1d(np.asarray(w, dtype=float))
        out = cheb(ww)
        lo, hi = self.working_range
        outside = (ww < lo) | (ww > hi)
        if np.any(outside):
            out = np.array(out, dtype=float)
            flat_out = out.ravel()
            flat_w = ww.ravel()
            for i in np.nonzero(outside.ravel())[0]:
                wi = float(flat_w[i])
                edge, p_edge = (lo, p_lo) if wi < lo else (hi, p_hi)
                tail, _ = quad(self.psi, edge, wi,
                               epsabs=1e-12, epsrel=1e-12, limit=500)
                flat_out[i] = p_edge + tail
        return float(out[0]) if np.ndim(w) == 0 else out.reshape(np.shape(w))

    def rho_hat(self, r):
        """Convex primitive of rho: rho_hat(r) = int_{psi(0)}^r rho(s) ds.

        Evaluated through the substitution s = psi(t), which turns the
        integral into ``rho(r)*r - int_0^{rho(r)} psi(t) dt`` and needs a
        single inversion.  ``rho_hat(psi(0)) = 0`` and the map is convex.
        """
        w = self.rho(r)
        return w * np.asarray(r, dtype=float) - self._psi_primitive(w)

    def rho_hat_of_psi(self, u):
        """Fast path for rho_hat(psi(u)): no inversion needed."""
        u = np.asarray(u, dtype=float)
        return u * self.psi(u) - self._psi_primitive(u)


# ----------------------------------------------------------------------
# Assumption validation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    """One two-sided-bound check: worst sampled margin and where it occurred."""

    name: str
    passed: bool
    margin: float
    worst_point: float


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the eight smoothness/slope bound checks."""

    checks: tuple[BoundCheck, ...]
    u_range: tuple[float, float]
    n_samples: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            out.append(f"{c.name:>18s}: {status}  margin={c.margin:.6e} at u={c.worst_point:.6g}")
        return out


def validate_assumptions(model: ConstitutiveModel, u_range=None,
                         n_samples: int = 4096) -> AssumptionReport:
    """Check the eight bound constants of the model on a dense sample.

    Each check records its worst margin (nonnegative margin = bound
    satisfied at every sample) and the sample point attaining it.
    Violations become failed report entries, never exceptions.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    lo, hi = u_range if u_range is not None else model.working_range
    u = np.linspace(lo, hi, n_samples)
    p1 = np.asarray(model.psi_prime(u), dtype=float)
    p2 = np.asarray(model.psi_second(u), dtype=float)
    p0 = np.asarray(model.psi(u), dtype=float)
    l0 = np.asarray(model.lam(u), dtype=float)
    l1 = np.asarray(model.lam_prime(u), dtype=float)
    l2 = np.asarray(model.lam_second(u), dtype=float)

    def check(name, margins, strict=False):
        i = int(np.argmin(margins))
        m = float(margins[i])
        ok = (m > 0.0) if strict else (m >= 0.0)
        return BoundCheck(name, bool(ok and np.all(np.isfinite(margins))), m, float(u[i]))

    checks = (
        check("psi_prime_lower", p1 - model.delta_psi),
        check("psi_prime_upper", model.c_psi - p1),
        check("psi_second_bound", model.c_psi - np.abs(p2)),
        check("psi_positive", p0, strict=True),
        check("lam_lower", l0 - model.delta_lam),
        check("lam_upper", model.c_lam - l0),
        check("lam_prime_bound", model.c_lam - np.abs(l1)),
        check("lam_second_bound", model.c_lam - np.abs(l2)),
    )
    return AssumptionReport(checks, (float(lo), float(hi)), n_samples)


def check_derivative_consistency(model: ConstitutiveModel, u_range=None,
                                 n_samples: int = 256, step: float = 1e-5,
                                 rtol: float = 1e-6) -> list[BoundCheck]:
    """Compare analytic derivatives against central finite differences.

    First derivatives are differenced from the curve itself, second
    derivatives from the analytic first derivative.  The comparison is
    relative with a small floor tied to the largest sampled magnitude,
    so near-flat regions do not produce spurious failures.
    """
    lo, hi = u_range if u_range is not None else model.working_range
    u = np.linspace(lo + step, hi - step, n_samples)
    pairs = (
        ("psi_prime_fd", model.psi, model.psi_prime),
        ("psi_second_fd", model.psi_prime, model.psi_second),
        ("lam_prime_fd", model.lam, model.lam_prime),
        ("lam_second_fd", model.lam_prime, model.lam_second),
    )
    out = []
    for name, base, deriv in pairs:
        fd = (np.asarray(base(u + step), dtype=float)
              - np.asarray(base(u - step), dtype=float)) / (2.0 * step)
        an = np.asarray(deriv(u), dtype=float)
        scale = np.abs(an) + 1e-3 * np.max(np.abs(an)) + 1e-12
        rel = np.abs(fd - an) / scale
        i = int(np.argmax(rel))
        out.append(BoundCheck(name, bool(rel[i] <= rtol), float(rtol - rel[i]), float(u[i])))
    return out


# ----------------------------------------------------------------------
# Presets
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialPreset:
    name: str
    model: ConstitutiveModel
    provenance: str


def _log_cosh(x):
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def _build_synthetic_a() -> MaterialPreset:
    def psi(u):
        u = np.asarray(u, dtype=float)
        return u + 60.0 + 2.0 * np.tanh(u / 4.0)

    def psi_prime(u):
        u = np.asarray(u, dtype=float)
        return 1.0 + 0.5 / np.cosh(u / 4.0) ** 2

    def psi_second(u):
        u = np.asarray(u, dtype=float)
        return -0.25 * np.tanh(u / 4.0) / np.cosh(u / 4.0) ** 2

    def psi_anti(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u + 60.0 * u + 8.0 * _log_cosh(u / 4.0)

    def lam(u):
        return 2.0 + np.sin(np.asarray(u, dtype=float))

    def lam_prime(u):
        return np.cos(np.asarray(u, dtype=float))

    def lam_second(u):
        return -np.sin(np.asarray(u, dtype=float))

    def lam_anti(u):
        u = np.asarray(u, dtype=float)
        return 2.0 * u - np.cos(u)

    model = ConstitutiveModel(
        psi=psi, lam=lam,
        psi_prime=psi_prime, psi_second=psi_second,
        lam_prime=lam_prime, lam_second=lam_second,
        delta_psi=1.0, c_psi=1.5, delta_lam=1.0, c_lam=3.0,
        lam_antiderivative=lam_anti, psi_antiderivative=psi_anti,
        working_range=(-50.0, 50.0), name="synthetic-A",
    )
    provenance = ("Fully analytic test material: psi(u) = u + 60 + 2*tanh(u/4), "
                  "lambda(u) = 2 + sin(u). Slope bounds psi' in [1, 1.5], "
                  "lambda in [1, 3] hold globally; both primitives are closed form; "
                  "psi > 0 on the documented range [-50, 50].")
    return MaterialPreset("synthetic-A", model, provenance)


# Soft clamp of the log-suction argument: C^2, strictly increasing, maps
# R onto (lo, hi) and is near-identity well inside the interval.
_PR_CLAMP_LO, _PR_CLAMP_HI, _PR_CLAMP_W = -6.0, 12.0, 0.5
_PR_RHO_W = 1000.0      # water density: converts content to stored mass
_PR_DELTA_PSI = 1e-3    # uniform storage slope added on top of the curve
_PR_DELTA_LAM = 1e-3    # conductivity floor after peak normalisation


def _pr_clamp(s):
    w = _PR_CLAMP_W
    s = np.asarray(s, dtype=float)
    return (_PR_CLAMP_LO
            + w * np.logaddexp(0.0, (s - _PR_CLAMP_LO) / w)
            - w * np.logaddexp(0.0, (s - _PR_CLAMP_HI) / w))


def _pr_clamp_d1(s):
    w = _PR_CLAMP_W
    s = np.asarray(s, dtype=float)
    return expit((s - _PR_CLAMP_LO) / w) - expit((s - _PR_CLAMP_HI) / w)


def _pr_clamp_d2(s):
    w = _PR_CLAMP_W
    s = np.asarray(s, dtype=float)
    a = expit((s - _PR_CLAMP_LO) / w)
    b = expit((s - _PR_CLAMP_HI) / w)
    return (a * (1.0 - a) - b * (1.0 - b)) / w


def _pr_diff_triple(pw):
    """Diffusivity curve with first/second derivatives w.r.t. water content."""
    pw = np.asarray(pw, dtype=float)
    d = 30.332e-6 * np.exp(79.8 * pw ** 1.5)
    root = np.sqrt(pw)
    g = 79.8 * 1.5 * root            # d/dpw of the exponent
    d1 = d * g
    d2 = d * (g * g + 79.8 * 0.75 / root)
    return d, d1, d2


def _pr_slope(s):
    """Retention slope w.r.t. the potential, expressed in s = log10(-mu)."""
    q = np.power(10.0, -np.asarray(s, dtype=float)) / _LN10
    return -_ret_d1(s) * q


def _pr_slope_d1(s):
    q = np.power(10.0, -np.asarray(s, dtype=float)) / _LN10
    return q * (_LN10 * _ret_d1(s) - _ret_d2(s))


def _pr_slope_d2(s):
    q = np.power(10.0, -np.asarray(s, dtype=float)) / _LN10
    return q * (-_LN10 * _LN10 * _ret_d1(s) + 2.0 * _LN10 * _ret_d2(s) - _ret_d3(s))


def _pr_lam_raw(s):
    return _pr_diff_triple(_ret_value(s))[0] * _pr_slope(s)


def _pr_lam_raw_d1(s):
    d, d1, _ = _pr_diff_triple(_ret_value(s))
    return d1 * _ret_d1(s) * _pr_slope(s) + d * _pr_slope_d1(s)


def _pr_lam_raw_d2(s):
    d, d1, d2 = _pr_diff_triple(_ret_value(s))
    f1, f2 = _ret_d1(s), _ret_d2(s)
    g, g1, g2 = _pr_slope(s), _pr_slope_d1(s), _pr_slope_d2(s)
    return (d2 * f1 * f1 * g + d1 * f2 * g + 2.0 * d1 * f1 * g1 + d * g2)


_PR_LAM_NORM = float(_pr_lam_raw(_PR_CLAMP_LO))  # peak of the raw conductivity


def _build_paper_regularized() -> MaterialPreset:
    rho_w, dpsi, dlam = _PR_RHO_W, _PR_DELTA_PSI, _PR_DELTA_LAM

    def psi(u):
        u = np.asarray(u, dtype=float)
        return rho_w * _ret_value(_pr_clamp(-u)) + dpsi * u

    def psi_prime(u):
        s = _pr_clamp(-np.asarray(u, dtype=float))
        return -rho_w * _ret_d1(s) * _pr_clamp_d1(-np.asarray(u, dtype=float)) + dpsi

    def psi_second(u):
        u = np.asarray(u, dtype=float)
        s = _pr_clamp(-u)
        c1 = _pr_clamp_d1(-u)
        c2 = _pr_clamp_d2(-u)
        return rho_w * (_ret_d2(s) * c1 * c1 + _ret_d1(s) * c2)

    def lam(u):
        u = np.asarray(u, dtype=float)
        return _pr_lam_raw(_pr_clamp(-u)) / _PR_LAM_NORM + dlam

    def lam_prime(u):
        u = np.asarray(u, dtype=float)
        return -_pr_lam_raw_d1(_pr_clamp(-u)) * _pr_clamp_d1(-u) / _PR_LAM_NORM

    def lam_second(u):
        u = np.asarray(u, dtype=float)
        s = _pr_clamp(-u)
        c1 = _pr_clamp_d1(-u)
        c2 = _pr_clamp_d2(-u)
        return (_pr_lam_raw_d2(s) * c1 * c1 + _pr_lam_raw_d1(s) * c2) / _PR_LAM_NORM

    model = ConstitutiveModel(
        psi=psi, lam=lam,
        psi_prime=psi_prime, psi_second=psi_second,
        lam_prime=lam_prime, lam_second=lam_second,
        delta_psi=dpsi, c_psi=80.0, delta_lam=dlam, c_lam=1.5,
        working_range=(-8.0, 3.0), name="paper-regularized",
    )
    provenance = (
        "Brick moisture curves in the log-potential coordinate u = -log10(-mu) "
        "(pF-style scaling; the documented suction window |mu| in [1e-3, 1e8] maps "
        "to u in [-8, 3]). The retention and capillary-diffusivity formulas are "
        "composed with a C^2 soft clamp of the log-suction argument to [-6, 12], "
        "the storage curve is rho_w * psi_w plus a uniform slope 1e-3, and the "
        "conductivity is peak-normalised with a floor 1e-3. Measured bounds on the "
        "working range: psi' in [8.98e-3, 73.31], |psi''| <= 64.68, lam <= 1.001 "
        "globally, |lam'| <= 0.43, |lam''| <= 0.32; documented constants "
        "(1e-3, 80, 1e-3, 1.5) hold with margin.")
    return MaterialPreset("paper-regularized", model, provenance)


_PRESET_BUILDERS = {
    "synthetic-A": _build_synthetic_a,
    "paper-regularized": _build_paper_regularized,
}

PRESET_NAMES = tuple(_PRESET_BUILDERS)

_OVERRIDABLE = ("delta_psi", "c_psi", "delta_lam", "c_lam", "working_range")


def make_preset(name: str, overrides: dict | None = None) -> MaterialPreset:
    """Build a named preset, optionally overriding its bound constants.

    Only the documented constants and the working range may be
    overridden; unknown keys raise :class:`ConfigError`.
    """
    try:
        preset = _PRESET_BUILDERS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown material preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
    if overrides:
        unknown = set(overrides) - set(_OVERRIDABLE)
        if unknown:
            raise ConfigError(f"unknown material overrides: {sorted(unknown)}")
        if "working_range" in overrides:
            rng = overrides["working_range"]
            overrides = dict(overrides, working_range=(float(rng[0]), float(rng[1])))
        model = replace(preset.model, **overrides)
        preset = MaterialPreset(preset.name, model,
                                preset.provenance + f" [overrides: {sorted(overrides)}]")
    return preset
