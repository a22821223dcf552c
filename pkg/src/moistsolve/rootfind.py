"""Safeguarded Newton inversion of strictly increasing scalar maps.

Used for the conductivity primitive and the storage curve: both are
smooth, strictly increasing with two-sided slope bounds, so a bracket
``[(y - f(0))/slope_hi, (y - f(0))/slope_lo]`` is available without any
function evaluation.  Newton runs inside that bracket with a bisection
fallback; if the stated slope bounds turn out to be loose, the bracket
is grown geometrically at whichever end the iterate gets pinned.  All
routines are vectorised over numpy arrays.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NumericsError

_MAX_ITER = 300


def invert_monotone(
    f: Callable[[np.ndarray], np.ndarray],
    fprime: Callable[[np.ndarray], np.ndarray],
    y,
    slope_lo: float,
    slope_hi: float,
    x0=None,
    rtol: float = 1e-14,
) -> np.ndarray:
    """Solve f(x) = y for strictly increasing f with f' in [slope_lo, slope_hi].

    Parameters
    ----------
    f, fprime
        Vectorised evaluators of the map and its derivative.
    y
        Target values (scalar or array).
    slope_lo, slope_hi
        Positive lower/upper bounds on f'.
    x0
        Optional warm-start iterate (same shape as y).  Without it the
        iteration starts from the slope-geometric-mean estimate, which
        keeps early evaluations near the scale of the solution even
        when the two slope bounds are orders of magnitude apart.
    rtol
        Convergence on the residual: ``|f(x)-y| <= rtol*max(1, |y|)``.

    Returns
    -------
    numpy.ndarray
        Solution array, same shape as ``y``.

    Raises
    ------
    NumericsError
        On iteration-cap exhaustion (carries residual diagnostics).
    """
    if not (slope_lo > 0.0 and slope_hi >= slope_lo):
        raise NumericsError(
            f"invalid slope bounds [{slope_lo}, {slope_hi}] for monotone inversion")
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)

    f0 = float(np.asarray(f(np.zeros(1)))[0])
    d = y - f0
    lo = np.minimum(d / slope_lo, d / slope_hi)
    hi = np.maximum(d / slope_lo, d / slope_hi)

    if x0 is not None:
        x = np.clip(np.broadcast_to(np.asarray(x0, dtype=float), y.shape).copy(), lo, hi)
    else:
        x = d / math.sqrt(slope_lo * slope_hi)

    tol = rtol * np.maximum(1.0, np.abs(y))
    r = np.asarray(f(x)) - y
    width0 = np.maximum(hi - lo, 1.0)
    for _ in range(_MAX_ITER):
        if np.all(np.abs(r) <= tol):
            return x[0] if scalar else x
        lo = np.where(r < 0.0, x, lo)
        hi = np.where(r > 0.0, x, hi)
        # a pinned endpoint with the wrong residual sign means the stated
        # slope bounds were loose; push the bracket outwards
        lo = np.where((x <= lo) & (r > 0.0), lo - width0, lo)
        hi = np.where((x >= hi) & (r < 0.0), hi + width0, hi)
        step = r / np.asarray(fprime(x))
        xn = x - step
        outside = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
        x = np.where(outside, 0.5 * (lo + hi), xn)
        r = np.asarray(f(x)) - y
    raise NumericsError(
        "monotone inversion did not converge",
        {"max_residual": float(np.max(np.abs(r))),
         "worst_index": int(np.argmax(np.abs(r))),
         "tolerance": float(np.max(tol))})
