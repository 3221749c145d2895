"""Classical mechanics on an invariant torus: rotation numbers, invariant
averages, finite-time flow averages, and arithmetic classification.

The geodesic flow of a surface of revolution is completely integrable, with
invariant tori Lambda_{E,F} labeled by energy E = p and angular momentum
F = theta_star, or after normalization by the single parameter a = F/sqrt(E).
Everything here reduces to one-dimensional quadrature over the meridian band
u(s) >= |a| (rotation number, Haar averages) or to integration of Hamilton's
equations (finite-time averages, Q_infinity intervals).

Quadratures with inverse-square-root turning-point singularities go through
quadrature.turning_point_integral; trajectories are integrated with a
high-order adaptive Runge-Kutta scheme with the averaging quadrature carried
as extra state, so the solver's error control covers it too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, IntegrationFailure, RootNotBracketed
from .geometry import SurfaceProfile, turning_points
from .kernels import kernel, kernel_support
from .observables import Observable
from .quadrature import turning_point_integral

RATIONAL = "rational"
DIOPHANTINE = "diophantine"
UNRESOLVED = "unresolved"

# rational when a convergent p/q sits within RATIONAL_TOL/q^2
RATIONAL_TOL = 1e-12


@dataclass(frozen=True)
class Torus:
    """Invariant torus p = E, theta_star = F with a = F/sqrt(E)."""

    E: float
    F: float
    a: float
    s_bounds: Tuple[float, float]


@dataclass(frozen=True)
class PhasePoint:
    s: float
    theta: float
    sigma: float
    theta_star: float


@dataclass(frozen=True)
class RotationClass:
    kind: str
    m: int = 0
    n: int = 0
    alpha: float = 0.0
    d: float = 0.0
    q_max: int = 0

    @staticmethod
    def rational(m: int, n: int) -> "RotationClass":
        g = math.gcd(abs(m), n)
        return RotationClass(RATIONAL, m=m // g, n=n // g)

    @staticmethod
    def diophantine(alpha: float, d: float, q_max: int) -> "RotationClass":
        return RotationClass(DIOPHANTINE, alpha=alpha, d=d, q_max=q_max)

    @staticmethod
    def unresolved() -> "RotationClass":
        return RotationClass(UNRESOLVED)

    @property
    def height(self) -> int:
        return abs(self.m) + self.n if self.kind == RATIONAL else 0


@dataclass(frozen=True)
class ScanRow:
    a: float
    omega: float
    rotation_class: RotationClass
    q_avg: float
    qinf_lo: float
    qinf_hi: float
    T: float


@dataclass(frozen=True)
class ClassicalScan:
    surface_id: str
    q_id: str
    rows: Tuple[ScanRow, ...]


@dataclass(frozen=True)
class WidthRow:
    height: int
    m: int
    n: int
    a: float
    width: float


def make_torus(surface: SurfaceProfile, E: float, F: float) -> Torus:
    if E <= 0.0:
        raise DomainError("torus energy must be positive")
    a = F / math.sqrt(E)
    if abs(a) >= surface.u_max:
        raise DomainError(f"|a| = {abs(a)} not below u_max = {surface.u_max}")
    if F == 0.0:
        bounds = (0.0, surface.L)
    else:
        bounds = turning_points(surface, abs(a))
    return Torus(E=float(E), F=float(F), a=a, s_bounds=bounds)


def _band(surface: SurfaceProfile, a: float):
    aa = abs(float(a))
    if not 0.0 < aa < surface.u_max:
        raise DomainError(
            f"a = {a} outside (-u_max, u_max) minus 0, u_max = {surface.u_max}")
    return aa, turning_points(surface, aa)


def rotation_number(surface: SurfaceProfile, a: float) -> float:
    """omega(Lambda_a), odd in a; absolute quadrature error below 1e-10."""
    aa, (s_minus, s_plus) = _band(surface, a)

    def integrand(s):
        u = surface.u(s)
        rad = np.maximum(1.0 - (aa / u) ** 2, 1e-300)
        return 1.0 / (u * u * np.sqrt(rad))

    val = turning_point_integral(integrand, s_minus, s_plus, tol=1e-12)
    return math.copysign(aa / math.pi * val, a)


def torus_average(surface: SurfaceProfile, q: Observable, a: float) -> float:
    """Haar average of q over Lambda_a.

    In (s, theta) the invariant measure has density ds / sigma(s) times the
    normalized angle measure, sigma = sqrt(1 - a^2/u^2), so the average is a
    ratio of two meridian integrals of the theta-mean of q.
    """
    aa, (s_minus, s_plus) = _band(surface, a)

    def inv_sigma(s):
        u = surface.u(s)
        rad = np.maximum(1.0 - (aa / u) ** 2, 1e-300)
        return 1.0 / np.sqrt(rad)

    den = turning_point_integral(inv_sigma, s_minus, s_plus, tol=1e-12)
    num = turning_point_integral(lambda s: q.theta_mean(s) * inv_sigma(s),
                                 s_minus, s_plus, tol=1e-12)
    return num / den


def _averages_along_flow(surface: SurfaceProfile, q: Observable,
                         s_start: float, sigma_start: float, f_ang: float,
                         theta_offsets: np.ndarray, T: float,
                         kernel_name: str) -> np.ndarray:
    """Kernel-weighted flow averages for a batch of starts sharing (s, sigma).

    Starts differing only in theta ride the same meridian trajectory, so one
    integration carries one quadrature slot per theta offset.
    """
    theta_offsets = np.asarray(theta_offsets, dtype=float)
    half = kernel_support(kernel_name)
    n = theta_offsets.size
    u0 = float(surface.u(s_start))
    E0 = sigma_start ** 2 + (f_ang / u0) ** 2 if u0 > 0 else sigma_start ** 2

    def rhs(t, y):
        s, sig, dth = y[0], y[1], y[2]
        u, du, _ = surface.evaluate(s)
        u = float(u)
        if f_ang != 0.0 and u <= 1e-9:
            raise IntegrationFailure("trajectory reached a pole with F != 0")
        u2 = u * u
        kt = float(kernel(kernel_name, np.array(t / T))) / T
        qv = q(s, theta_offsets + dth)
        out = np.empty(3 + n)
        out[0] = 2.0 * sig
        out[1] = 2.0 * f_ang * f_ang * float(du) / (u2 * u) if f_ang != 0.0 else 0.0
        out[2] = 2.0 * f_ang / u2 if f_ang != 0.0 else 0.0
        out[3:] = kt * qv
        return out

    y0 = np.zeros(3 + n)
    y0[0], y0[1] = s_start, sigma_start
    finals = []
    for t_end in (half * T, -half * T):
        sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853",
                        rtol=1e-12, atol=1e-13)
        if not sol.success:
            raise IntegrationFailure(f"flow integration failed: {sol.message}")
        yf = sol.y[:, -1]
        uf = float(surface.u(yf[0]))
        Ef = yf[1] ** 2 + ((f_ang / uf) ** 2 if f_ang != 0.0 else 0.0)
        if abs(Ef - E0) > 1e-9 * max(1.0, E0):
            raise IntegrationFailure(
                f"energy drift {abs(Ef - E0):.3e} along the trajectory")
        finals.append(yf[3:])
    return finals[0] - finals[1]


def flow_average(surface: SurfaceProfile, q: Observable, start: PhasePoint,
                 T: float, kernel_name: str = "bump",
                 expected: Optional[Torus] = None) -> float:
    """Smoothed average of q over the trajectory through start.

    The kernel K is scaled to K_T(t) = K(t/T)/T, so T is the averaging
    horizon up to the fixed kernel support.
    """
    if T <= 0.0:
        raise DomainError("averaging horizon must be positive")
    if start.theta_star == 0.0:
        raise DomainError("meridian orbits cross the poles; F = 0 unsupported")
    if expected is not None:
        u0 = float(surface.u(start.s))
        p0 = start.sigma ** 2 + (start.theta_star / u0) ** 2
        if abs(p0 - expected.E) > 1e-10 * max(1.0, expected.E) \
                or start.theta_star != expected.F:
            raise DomainError("start does not lie on the stated torus")
    vals = _averages_along_flow(surface, q, start.s, start.sigma,
                                start.theta_star, np.array([start.theta]),
                                T, kernel_name)
    return float(vals[0])


def transverse_starts(surface: SurfaceProfile, a: float, n_starts: int,
                      E: float = 1.0) -> Tuple[PhasePoint, ...]:
    """Uniform theta grid on the circle s = s0, sigma > 0 of Lambda_a.

    Every orbit of a rational torus crosses this circle, so sampling it
    sees every closed-orbit average.
    """
    aa = abs(float(a))
    if not 0.0 < aa < surface.u_max:
        raise DomainError(f"a = {a} outside the admissible band")
    f_ang = float(a) * math.sqrt(E)
    sigma0 = math.sqrt(E * (1.0 - (aa / surface.u_max) ** 2))
    return tuple(PhasePoint(s=surface.s0, theta=2.0 * math.pi * j / n_starts,
                            sigma=sigma0, theta_star=f_ang)
                 for j in range(n_starts))


def q_infinity(surface: SurfaceProfile, q: Observable, a: float, T: float,
               n_starts: int, kernel_name: str = "bump") -> Tuple[float, float]:
    """[min, max] of flow averages over transverse starts on Lambda_a."""
    if n_starts < 8:
        raise DomainError("need at least 8 transverse starts")
    starts = transverse_starts(surface, a, n_starts)
    thetas = np.array([p.theta for p in starts])
    vals = _averages_along_flow(surface, q, starts[0].s, starts[0].sigma,
                                starts[0].theta_star, thetas, T, kernel_name)
    return float(np.min(vals)), float(np.max(vals))


def _convergents(omega: float, q_max: int):
    """Continued-fraction convergents (p, q) of omega with q <= q_max."""
    out = []
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    x = float(omega)
    for _ in range(64):
        ai = math.floor(x)
        h_prev, h = h, ai * h + h_prev
        k_prev, k = k, ai * k + k_prev
        if k > q_max:
            break
        out.append((h, k))
        frac = x - ai
        if frac < 1e-15:
            break
        x = 1.0 / frac
    return out


def classify(omega: float, q_max: int, alpha: float, d: float) -> RotationClass:
    """Arithmetic type of a rotation number, resolution permitting.

    Rational detection matches convergents at the RATIONAL_TOL/q^2 scale.
    The Diophantine certificate |omega - p/q| >= alpha/q^(2+d) is checked on
    all convergents with q <= q_max, which settles every rational once
    alpha <= q^d/2 (non-convergents sit at distance >= 1/(2q^2)); smaller q
    are swept directly when alpha is large enough to need it.
    """
    convs = [(p, qd, abs(omega - p / qd)) for p, qd in _convergents(omega, q_max)]
    for p, qd, gap in convs:
        if gap <= RATIONAL_TOL / qd ** 2:
            return RotationClass.rational(p, qd)
    for p, qd, gap in convs:
        if gap < alpha / qd ** (2.0 + d):
            return RotationClass.unresolved()
    if 2.0 * alpha > 1.0:
        q_direct = int(math.ceil((2.0 * alpha) ** (1.0 / d)))
        for qd in range(1, min(q_direct, q_max) + 1):
            p = round(omega * qd)
            if abs(omega - p / qd) < alpha / qd ** (2.0 + d):
                return RotationClass.unresolved()
    return RotationClass.diophantine(alpha, d, q_max)


def scan_classical(surface: SurfaceProfile, q: Observable,
                   a_values: Sequence[float], T: float, n_starts: int = 8,
                   q_max: int = 1000, alpha: float = 0.05, d: float = 0.5,
                   kernel_name: str = "bump") -> ClassicalScan:
    """Tabulate omega, classification, Haar average and Q_infinity over a-grid.

    T = 0 skips the flow-average columns (they come back NaN), which keeps
    quick classification-only scans cheap.
    """
    rows = []
    for a in a_values:
        omega = rotation_number(surface, a)
        rc = classify(omega, q_max, alpha, d)
        q_avg = torus_average(surface, q, a)
        if T > 0.0:
            lo, hi = q_infinity(surface, q, a, T, n_starts, kernel_name)
        else:
            lo = hi = math.nan
        rows.append(ScanRow(a=float(a), omega=omega, rotation_class=rc,
                            q_avg=q_avg, qinf_lo=lo, qinf_hi=hi, T=T))
    return ClassicalScan(surface_id=surface.ident, q_id=q.ident,
                         rows=tuple(rows))


def _height_candidates(height: int):
    for n in range(1, height):
        m = height - n
        if math.gcd(m, n) == 1:
            yield m, n
            yield -m, n


def width_vs_height(surface: SurfaceProfile, q: Observable,
                    edge: Tuple[float, float], heights: Sequence[int],
                    T: float, n_starts: int = 8,
                    kernel_name: str = "bump"):
    """Measured Q_infinity width at one rational torus per requested height.

    For each height the coarsest bracketed resonance (smallest denominator)
    is located by root-finding omega(a) = m/n on the edge.
    """
    a_lo, a_hi = edge
    w_lo = rotation_number(surface, a_lo)
    w_hi = rotation_number(surface, a_hi)
    rows = []
    for height in heights:
        picked = None
        for m, n in sorted(_height_candidates(height), key=lambda t: (t[1], -t[0])):
            target = m / n
            if (w_lo - target) * (w_hi - target) <= 0.0:
                picked = (m, n)
                break
        if picked is None:
            raise RootNotBracketed(
                f"no height-{height} rational between omega = {w_lo:.6f} "
                f"and {w_hi:.6f}")
        m, n = picked
        a_star = brentq(lambda a: rotation_number(surface, a) - m / n,
                        a_lo, a_hi, xtol=1e-12)
        lo, hi = q_infinity(surface, q, a_star, T, n_starts, kernel_name)
        rows.append(WidthRow(height=height, m=m, n=n, a=a_star, width=hi - lo))
    return rows
