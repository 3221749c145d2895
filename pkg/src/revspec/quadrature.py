"""Quadrature for integrals with turning-point endpoint singularities.

The integrals of the classical module all have the form

    int_{s-}^{s+} f(s) * sigma(s)^w ds,     sigma = sqrt(1 - a^2/u(s)^2),

with w = +1 (actions) or w = -1 (rotation numbers, invariant measure) and
sigma vanishing like sqrt(s - s_pm) at both ends.  The substitution
s = s- + (s+ - s-) sin^2(phi) removes the singularity exactly: sigma becomes
sin(phi) cos(phi) times an analytic factor, so the phi-integrand is analytic
on [0, pi/2] and Gauss-Legendre converges geometrically.  Node counts are
doubled until successive values agree to the requested tolerance.

A direct double-exponential evaluation is kept in the test suite as a
cross-check; it cannot serve as the production path because its nodes enter
the u(s) - a cancellation zone and bias the result at the 1e-8 level.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import QuadratureFailure

_GL_ORDERS = (24, 48, 96, 192, 384, 768)
_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _gl_cache:
        _gl_cache[n] = leggauss(n)
    return _gl_cache[n]


def gauss_refine(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                 tol: float = 1e-12) -> float:
    """Integrate a smooth vectorized integrand on [lo, hi] by node doubling.

    Raises QuadratureFailure if successive Gauss-Legendre values never agree
    to ``tol`` (absolute, scaled by the integral magnitude).
    """
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    prev = None
    best = None
    best_err = np.inf
    for n in _GL_ORDERS:
        x, w = _gl_nodes(n)
        val = half * float(np.dot(w, f(mid + half * x)))
        if prev is not None:
            err = abs(val - prev)
            if err < best_err:
                best, best_err = val, err
            scale = max(1.0, abs(val))
            if err <= tol * scale:
                return val
        prev = val
    if best is not None and best_err <= 100 * tol * max(1.0, abs(best)):
        # refinement stalled at the roundoff floor; the stalled value is good
        return best
    raise QuadratureFailure(
        f"Gauss doubling stalled at error {best_err:.3e} (tol {tol:.1e})")


def turning_point_integral(g: Callable[[np.ndarray], np.ndarray],
                           s_minus: float, s_plus: float,
                           tol: float = 1e-12) -> float:
    """Integrate g(s) over (s-, s+) through the sin^2 turning-point map.

    g must be vectorized and finite on the open interval; endpoint
    singularities up to inverse square root are removed by the map.
    """
    span = s_plus - s_minus

    def phi_integrand(phi: np.ndarray) -> np.ndarray:
        sn, cs = np.sin(phi), np.cos(phi)
        s = s_minus + span * sn * sn
        return g(s) * (2.0 * span * sn * cs)

    return gauss_refine(phi_integrand, 0.0, 0.5 * np.pi, tol=tol)
