"""Analytic surfaces of revolution and the classical kinetic symbol.

A simple surface of revolution is described by its meridian profile u(s),
s in [0, L], vanishing linearly at both poles with a single interior
maximum u_max = u(s0) (the equator).  In the momenta (sigma, theta_star)
conjugate to (s, theta) the geodesic Hamiltonian is

    p = sigma^2 + theta_star^2 / u(s)^2

and everything classical downstream (turning points, rotation numbers,
torus averages) is built from u, u', u''.

Profiles come only from builtin closed-form families, so the simple-surface
invariants can be checked honestly at construction time instead of being
assumed about imported point data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateTorus, DomainError, InvalidProfile

_EvalFn = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]

# Slightly superunit meridian slopes are accepted: the builtin family
# crosses |u'| = 1 by ~0.6% already at beta = 0.2, and only the embedding
# reconstruction (which clamps) ever consumes sqrt(1 - u'^2).
_SLOPE_SQ_SLACK = 0.05

_ENDPOINT_SLOPE_TOL = 1e-9
_VALIDATION_GRID = 8192


@dataclass(frozen=True)
class SurfaceProfile:
    """Validated meridian profile; immutable, safe to share across workers."""

    L: float
    family_tag: str
    params: Tuple[float, ...]
    s0: float
    u_max: float
    _raw: _EvalFn = field(repr=False)

    def evaluate(self, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (u, u', u'') at s, vectorized."""
        return self._raw(np.asarray(s, dtype=float))

    def u(self, s) -> np.ndarray:
        return self.evaluate(s)[0]

    def du(self, s) -> np.ndarray:
        return self.evaluate(s)[1]

    def d2u(self, s) -> np.ndarray:
        return self.evaluate(s)[2]

    @property
    def ident(self) -> str:
        inner = ",".join(repr(float(p)) for p in self.params)
        return f"{self.family_tag}[{inner}]"


def _deformed_sphere(beta: float) -> Tuple[float, _EvalFn]:
    b3 = 3.0 * beta

    def ev(s: np.ndarray):
        sn, cs = np.sin(s), np.cos(s)
        sn2 = sn * sn
        u = sn * (1.0 + beta * sn2)
        du = cs * (1.0 + b3 * sn2)
        d2u = -sn * (1.0 + b3 * sn2) + 2.0 * b3 * sn * cs * cs
        return u, du, d2u

    return np.pi, ev


def make_profile(family: str, params=()) -> SurfaceProfile:
    """Build and validate a builtin profile.

    Families: "deformed-sphere" with one parameter beta, giving
    u(s) = sin(s) (1 + beta sin^2 s) on [0, pi]; "sphere" is shorthand
    for beta = 0.  Raises InvalidProfile when the requested member
    violates a simple-surface invariant (wrong endpoint slopes, extra
    critical points, sign-indefinite profile, runaway slopes).
    """
    params = tuple(float(p) for p in np.atleast_1d(np.asarray(params, dtype=float)))
    if family == "sphere":
        if params not in ((), (0.0,)):
            raise InvalidProfile("family 'sphere' takes no parameters")
        family, params = "deformed-sphere", (0.0,)
    if family != "deformed-sphere":
        raise InvalidProfile(f"unknown profile family {family!r}")
    if len(params) != 1:
        raise InvalidProfile("family 'deformed-sphere' takes exactly one parameter")

    L, ev = _deformed_sphere(params[0])
    s0, u_max = _validate(L, ev)
    return SurfaceProfile(L=L, family_tag=family, params=params,
                          s0=s0, u_max=u_max, _raw=ev)


def _validate(L: float, ev: _EvalFn) -> Tuple[float, float]:
    u0, du0, _ = ev(np.array(0.0))
    uL, duL, _ = ev(np.array(L))
    if abs(float(u0)) > 1e-12 or abs(float(uL)) > 1e-12:
        raise InvalidProfile("profile does not vanish at the poles")
    if abs(float(du0) - 1.0) > _ENDPOINT_SLOPE_TOL:
        raise InvalidProfile(f"u'(0) = {float(du0)}, expected 1")
    if abs(float(duL) + 1.0) > _ENDPOINT_SLOPE_TOL:
        raise InvalidProfile(f"u'(L) = {float(duL)}, expected -1")

    s = np.linspace(0.0, L, _VALIDATION_GRID + 1)
    u, du, _ = ev(s)
    interior = slice(1, -1)
    if np.min(u[interior]) <= 0.0:
        raise InvalidProfile("profile is not positive on the interior")
    if np.max(du * du) > 1.0 + _SLOPE_SQ_SLACK:
        raise InvalidProfile(
            f"meridian slope reaches |u'|^2 = {np.max(du * du):.4f} > 1")

    roots = _critical_points(L, ev, s, du)
    if len(roots) != 1:
        raise InvalidProfile(
            f"expected one interior critical point, found {len(roots)}")
    s0 = roots[0]
    _, _, d2u0 = ev(np.array(s0))
    if float(d2u0) >= -1e-9:
        raise InvalidProfile("critical point is not a nondegenerate maximum")
    return s0, float(ev(np.array(s0))[0])


def _critical_points(L, ev, s, du) -> list:
    du_of = lambda x: float(ev(np.array(x))[1])
    roots = []
    for i in range(1, len(s) - 2):
        a, b = du[i], du[i + 1]
        if a == 0.0:
            roots.append(s[i])
        elif a * b < 0.0:
            roots.append(brentq(du_of, s[i], s[i + 1],
                                xtol=1e-14, rtol=4 * np.finfo(float).eps))
    # collapse near-coincident hits from grid-node zeros
    roots.sort()
    out = []
    for r in roots:
        if not out or r - out[-1] > 1e-9:
            out.append(r)
    return out


def symbol_p(surface: SurfaceProfile, s: float, sigma: float,
             theta_star: float) -> float:
    """Kinetic symbol sigma^2 + theta_star^2 / u(s)^2."""
    if s < 0.0 or s > surface.L:
        raise DomainError(f"s = {s} outside the meridian [0, {surface.L}]")
    if theta_star == 0.0:
        return float(sigma) ** 2
    u = float(surface.u(s))
    if u <= 0.0:
        raise DomainError("theta_star != 0 at a pole")
    return float(sigma) ** 2 + float(theta_star) ** 2 / (u * u)


def turning_points(surface: SurfaceProfile, a: float) -> Tuple[float, float]:
    """Solve u(s) = a on both sides of the equator.

    Returns s_minus < s0 < s_plus bracketing the classically allowed band
    of the torus with normalized angular momentum a.
    """
    a = float(a)
    if not 0.0 < a < surface.u_max:
        raise DomainError(
            f"a = {a} outside (0, {surface.u_max})")
    if surface.u_max - a < 1e-12 * max(1.0, surface.u_max):
        raise DegenerateTorus(f"a = {a} is the equatorial value")

    f = lambda x: float(surface.u(x)) - a
    # u is strictly monotone on each side of s0, so halving toward the
    # pole always lands below any admissible a
    lo = 0.5 * surface.s0
    while f(lo) >= 0.0:
        lo *= 0.5
    hi = surface.L - 0.5 * (surface.L - surface.s0)
    while f(hi) >= 0.0:
        hi = surface.L - 0.5 * (surface.L - hi)
    kw = dict(xtol=1e-14, rtol=4 * np.finfo(float).eps)
    s_minus = brentq(f, lo, surface.s0, **kw)
    s_plus = brentq(f, surface.s0, hi, **kw)
    return s_minus, s_plus


def embedding_curve(surface: SurfaceProfile, n: int = 512):
    """Sample (s, u, v) with v = integral of sqrt(max(0, 1 - u'^2)).

    Only for plotting the meridian in the (v, u) half-plane; spectral code
    never touches v.
    """
    s = np.linspace(0.0, surface.L, n)
    _, du, _ = surface.evaluate(s)
    vp = np.sqrt(np.maximum(0.0, 1.0 - du * du))
    v = np.concatenate([[0.0], np.cumsum(0.5 * (vp[1:] + vp[:-1]) * np.diff(s))])
    return s, surface.u(s), v
