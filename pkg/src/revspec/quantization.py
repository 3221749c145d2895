"""Action integrals and the quantized lattice of complex quasi-eigenvalues.

For a torus Lambda_{E,F} the meridian action is

    I1(E, F) = (1/pi) int_{s-}^{s+} sqrt(E - F^2/u(s)^2) ds,

the angular action is I2 = F, and the quantization conditions

    I1 = h (k1 + 1/2),   I2 = h k2

(Maslov indices 2 and 0: the meridian cycle crosses two turning points, the
angular cycle none) select the tori carrying quasi-eigenvalues

    z = E + i eps <q>(Lambda_{F/sqrt(E)}).

Columns with k2 = 0 quantize the meridian family through the poles; the
invariant average is still perfectly regular there (sigma = 1), but the
rotation number has no continuous extension across a = 0, so those entries
carry the unresolved classification rather than a made-up limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .classical import RotationClass, classify, rotation_number, torus_average
from .errors import DomainError, RootNotBracketed
from .geometry import SurfaceProfile, turning_points
from .observables import Observable
from .quadrature import turning_point_integral

# fractional E-margin keeping brackets clear of the degenerate equator
_DEGEN_MARGIN = 1e-8


@dataclass(frozen=True)
class ActionPair:
    I1: float
    I2: float


@dataclass(frozen=True)
class QuasiEigenvalue:
    k1: int
    k2: int
    E: float
    F: float
    z: complex
    torus_class: RotationClass
    near_degenerate: bool = False


@dataclass(frozen=True)
class Lattice:
    surface_id: str
    q_id: str
    h: float
    eps: float
    window: Tuple[float, float]
    entries: Tuple[QuasiEigenvalue, ...]


def _meridian_action(surface: SurfaceProfile, E: float, F: float) -> float:
    if F == 0.0:
        lo, hi = 0.0, surface.L
    else:
        a = abs(F) / math.sqrt(E)
        lo, hi = turning_points(surface, a)
    F2 = F * F

    def integrand(s):
        u = surface.u(s)
        return np.sqrt(np.maximum(E - F2 / (u * u), 0.0))

    return turning_point_integral(integrand, lo, hi, tol=1e-12) / math.pi


def actions(surface: SurfaceProfile, E: float, F: float) -> ActionPair:
    """Action pair (I1, I2) of Lambda_{E,F}; quadrature error below 1e-10."""
    if E <= 0.0:
        raise DomainError("E must be positive")
    if abs(F) >= surface.u_max * math.sqrt(E):
        raise DomainError(
            f"|F| = {abs(F)} not below u_max sqrt(E) = "
            f"{surface.u_max * math.sqrt(E)}")
    return ActionPair(I1=_meridian_action(surface, E, F), I2=float(F))


def invert_actions(surface: SurfaceProfile, I1_target: float, F: float,
                   bracket: Optional[Tuple[float, float]] = None) -> float:
    """Energy E with I1(E, F) = I1_target, to action residual 1e-9.

    I1 is strictly increasing in E, so a bracketed solve is safe; the
    bracket is grown geometrically from the degenerate energy when not
    supplied by the caller.
    """
    if I1_target < 0.0:
        raise DomainError("I1 must be nonnegative")
    E_floor = (F / surface.u_max) ** 2
    if I1_target == 0.0:
        return E_floor

    f = lambda E: _meridian_action(surface, E, F) - I1_target
    if bracket is None:
        lo = E_floor * (1.0 + _DEGEN_MARGIN) if F != 0.0 else 0.0
        hi = max(2.0 * E_floor, 1.0)
        for _ in range(80):
            if f(hi) >= 0.0:
                break
            lo = hi
            hi *= 2.0
        else:
            raise RootNotBracketed("action target not reached below E cap")
    else:
        lo, hi = bracket
        if f(lo) > 0.0 or f(hi) < 0.0:
            raise RootNotBracketed("supplied energy bracket does not contain "
                                   "the action target")
    E = brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    resid = abs(_meridian_action(surface, E, F) - I1_target)
    if resid > 1e-9:
        raise RootNotBracketed(f"action inversion residual {resid:.2e}")
    return E


def ebk_lattice(surface: SurfaceProfile, q: Observable, h: float, eps: float,
                E_window: Tuple[float, float], classify_entries: bool = True,
                q_max: int = 1000, alpha: float = 0.05, d: float = 0.5) -> Lattice:
    """Enumerate quantized tori with E in the window.

    Entries go k2 ascending, then k1; tori within 1e-3 of the degenerate
    equator in the a-parameter are tagged, not dropped.  classify_entries
    False skips the per-entry rotation-number quadratures for callers that
    only consume the E-values.
    """
    if h <= 0.0 or h > 0.5:
        raise DomainError("h must lie in (0, 0.5]")
    if eps < 0.0:
        raise DomainError("eps must be nonnegative")
    E_lo, E_hi = float(E_window[0]), float(E_window[1])
    if not 0.0 < E_lo < E_hi:
        raise DomainError("energy window must satisfy 0 < lo < hi")

    k2_cap = int(math.floor(surface.u_max * math.sqrt(E_hi) / h))
    entries = []
    for k2 in range(-k2_cap, k2_cap + 1):
        F = h * k2
        E_floor = (F / surface.u_max) ** 2
        col_lo = max(E_lo, E_floor * (1.0 + _DEGEN_MARGIN))
        if col_lo >= E_hi:
            continue
        I1_lo = _meridian_action(surface, col_lo, F)
        I1_hi = _meridian_action(surface, E_hi, F)
        k1_lo = max(0, int(math.ceil(I1_lo / h - 0.5 - 1e-12)))
        k1_hi = int(math.floor(I1_hi / h - 0.5 + 1e-12))
        for k1 in range(k1_lo, k1_hi + 1):
            E = invert_actions(surface, h * (k1 + 0.5), F,
                               bracket=(col_lo, E_hi))
            if not E_lo <= E <= E_hi:
                continue
            a = F / math.sqrt(E)
            near_deg = surface.u_max - abs(a) <= 1e-3
            if eps != 0.0:
                z = complex(E, eps * _entry_average(surface, q, a))
            else:
                z = complex(E, 0.0)
            if classify_entries and k2 != 0:
                rc = classify(rotation_number(surface, a), q_max, alpha, d)
            else:
                rc = RotationClass.unresolved()
            entries.append(QuasiEigenvalue(k1=k1, k2=k2, E=E, F=F, z=z,
                                           torus_class=rc,
                                           near_degenerate=near_deg))
    return Lattice(surface_id=surface.ident, q_id=q.ident, h=h, eps=eps,
                   window=(E_lo, E_hi), entries=tuple(entries))


def _entry_average(surface: SurfaceProfile, q: Observable, a: float) -> float:
    if a != 0.0:
        return torus_average(surface, q, a)
    # meridian torus: sigma = 1, the average is the plain meridian mean
    num = turning_point_integral(lambda s: q.theta_mean(s), 0.0, surface.L,
                                 tol=1e-12)
    return num / surface.L
