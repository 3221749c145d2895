"""Averaging kernels for finite-time flow averages and the G_T weight.

The builtin smooth kernel is the standard bump

    K(t) = c * exp(-1/(1 - t^2))   on (-1, 1),   K = 0 outside,

normalized to unit mass.  The boxcar 1_[-1/2,1/2] realizes the plain flow
average; both are even with unit mass, which is all the averaging theory
needs.  K_hat denotes the Fourier transform K_hat(tau) = int K(t) e^{-i t tau} dt;
evenness makes it real, and K_hat(0) = 1.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DomainError, QuadratureFailure
from .quadrature import gauss_refine


def _bump_raw(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def _bump_mass() -> float:
    return gauss_refine(_bump_raw, -1.0, 1.0, tol=1e-14)


_BUMP_MASS = _bump_mass()


def kernel(name: str, t: np.ndarray) -> np.ndarray:
    """Evaluate the named unit-mass kernel at t (support inside [-1, 1])."""
    t = np.asarray(t, dtype=float)
    if name == "bump":
        return _bump_raw(t) / _BUMP_MASS
    if name == "box":
        return np.where(np.abs(t) <= 0.5, 1.0, 0.0)
    raise DomainError(f"unknown kernel {name!r}")


def kernel_support(name: str) -> float:
    """Half-width of the kernel support."""
    if name == "bump":
        return 1.0
    if name == "box":
        return 0.5
    raise DomainError(f"unknown kernel {name!r}")


# Beyond this the bump transform has decayed past ~1e-8 (it falls off like
# exp(-sqrt(tau))), which is under every tolerance the transform feeds into.
_BUMP_HAT_CUTOFF = 400.0


@lru_cache(maxsize=8)
def _gl_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _bump_hat_batch(tau: np.ndarray) -> np.ndarray:
    """cos-transform of the unit bump at the given |tau| <= cutoff values.

    One Gauss-Legendre rule over [0, 1] serves the whole batch; the node
    count follows the fastest oscillation present and the result is
    accepted only if doubling the rule moves nothing past 1e-12.
    """
    tmax = float(tau.max(initial=0.0))
    n = max(192, int(0.75 * tmax) + 64)
    for _ in range(6):
        x, w = _gl_rule(n)
        x2, w2 = _gl_rule(2 * n)
        t = 0.5 * (x + 1.0)
        t2 = 0.5 * (x2 + 1.0)
        kvals = _bump_raw(t) / _BUMP_MASS
        kvals2 = _bump_raw(t2) / _BUMP_MASS
        # even kernel: transform is 2 int_0^1 K cos(tau t) dt
        a = (w * kvals) @ np.cos(np.outer(t, tau))
        b = (w2 * kvals2) @ np.cos(np.outer(t2, tau))
        if np.max(np.abs(a - b)) <= 1e-12:
            return b
        n *= 2
    raise QuadratureFailure("bump transform quadrature did not settle")


def kernel_hat(name: str, tau: np.ndarray) -> np.ndarray:
    """Fourier transform of the kernel, real by evenness; vectorized.

    The boxcar transform is sin(tau/2)/(tau/2) in closed form.  The bump
    is integrated by a shared Gauss rule per call, with values beyond the
    decay cutoff set to zero.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if name == "box":
        return np.sinc(tau / (2.0 * np.pi))
    if name != "bump":
        raise DomainError(f"unknown kernel {name!r}")
    out = np.zeros(tau.shape, dtype=float)
    at = np.abs(tau)
    near = at <= _BUMP_HAT_CUTOFF
    if np.any(near):
        vals, inv = np.unique(at[near], return_inverse=True)
        out[near] = _bump_hat_batch(vals)[inv]
    return out
