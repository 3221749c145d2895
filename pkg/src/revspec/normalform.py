"""Fourier-Taylor symbol algebra: secular averaging and finite-time weights.

A symbol here is a finite Fourier series in the angle pair x = (x1, x2)
whose coefficients are sampled on a rectangular grid in the dual
variables xi = (xi1, xi2),

    s(x, xi) = sum_{|k|_inf <= K} c_k(xi) e^{i k.x},

with xi-derivatives taken by centered differences on the grid (second
order, one-sided at the edges).  This is deliberately a leading-symbol
calculus: brackets, homological solves, and Lie-series composition all
act on principal symbols only.  Integrable Hamiltonians enter as
x-independent symbols p(xi); their Hamilton field acts mode-diagonally,
H_p s = i (p'(xi) . k) c_k, which is what makes the averaging equations
solvable modewise with an explicit small-divisor floor.

The bridge back to the surfaces is action_angle_symbols, which samples
p(xi) by inverting the action map and expands a physical observable in
the angle coordinates of each invariant torus by one orbit integration
per grid point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (DivergenceWarning, DomainError, GridMismatch,
                     IntegrationFailure)
from .geometry import SurfaceProfile, turning_points
from .kernels import kernel_hat
from .observables import Observable
from .quadrature import turning_point_integral
from .quantization import invert_actions

Mode = Tuple[int, int]

_ZERO: Mode = (0, 0)


@dataclass(frozen=True, eq=False)
class XiGrid:
    """Uniform rectangular sample grid in (xi1, xi2)."""

    xi1: np.ndarray = field(repr=False)
    xi2: np.ndarray = field(repr=False)

    @property
    def n1(self) -> int:
        return self.xi1.size

    @property
    def n2(self) -> int:
        return self.xi2.size

    @property
    def d1(self) -> float:
        return float(self.xi1[1] - self.xi1[0])

    @property
    def d2(self) -> float:
        return float(self.xi2[1] - self.xi2[0])

    def matches(self, other: "XiGrid") -> bool:
        return (np.array_equal(self.xi1, other.xi1)
                and np.array_equal(self.xi2, other.xi2))

    def meshes(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xi1, self.xi2, indexing="ij")


def make_grid(center: Tuple[float, float], span: Tuple[float, float],
              shape: Tuple[int, int]) -> XiGrid:
    """Grid of `shape` points covering center +- span/2 on each axis.

    Three points per axis is the minimum that supports the centered
    differences every derivative in this module relies on.
    """
    if shape[0] < 3 or shape[1] < 3:
        raise DomainError("xi grid needs at least 3 points per axis")
    if span[0] <= 0.0 or span[1] <= 0.0:
        raise DomainError("xi grid spans must be positive")
    xi1 = np.linspace(center[0] - 0.5 * span[0], center[0] + 0.5 * span[0],
                      shape[0])
    xi2 = np.linspace(center[1] - 0.5 * span[1], center[1] + 0.5 * span[1],
                      shape[1])
    return XiGrid(xi1=xi1, xi2=xi2)


@dataclass(frozen=True, eq=False)
class FourierTaylorSymbol:
    """Finite Fourier series in x with grid-sampled xi coefficients.

    tail_norm records mass discarded by a mode cutoff in the operation
    that produced this symbol (zero for directly constructed ones).
    """

    grid: XiGrid
    k_max: int
    coeffs: Dict[Mode, np.ndarray] = field(repr=False)
    tail_norm: float = 0.0

    def coeff(self, k: Mode) -> np.ndarray:
        c = self.coeffs.get((int(k[0]), int(k[1])))
        if c is None:
            return np.zeros((self.grid.n1, self.grid.n2), dtype=complex)
        return c

    @property
    def modes(self) -> Tuple[Mode, ...]:
        return tuple(sorted(self.coeffs))

    @property
    def is_x_independent(self) -> bool:
        return all(k == _ZERO for k in self.coeffs)

    def norm(self) -> float:
        """Sum over modes of sup_xi |c_k|; dominates sup_{x,xi} |s|."""
        return float(sum(np.abs(c).max() for c in self.coeffs.values()))

    def x2_dependent_norm(self) -> float:
        return float(sum(np.abs(c).max()
                         for k, c in self.coeffs.items() if k[1] != 0))

    def reality_defect(self) -> float:
        """Largest violation of c_{-k} = conj(c_k) over all modes."""
        worst = 0.0
        for k, c in self.coeffs.items():
            mk = (-k[0], -k[1])
            worst = max(worst,
                        float(np.abs(self.coeff(mk) - np.conj(c)).max()))
        return worst

    def evaluate_x(self, x1: float, x2: float) -> np.ndarray:
        out = np.zeros((self.grid.n1, self.grid.n2), dtype=complex)
        for (k1, k2), c in self.coeffs.items():
            out += c * np.exp(1j * (k1 * x1 + k2 * x2))
        return out

    def sup_x_abs(self, nx: int = 64) -> np.ndarray:
        """sup over the x-torus of |s(x, xi)|, per grid point."""
        if nx <= 2 * self.k_max:
            raise DomainError("x sample grid coarser than the mode content")
        arr = np.zeros((nx, nx, self.grid.n1, self.grid.n2), dtype=complex)
        for (k1, k2), c in self.coeffs.items():
            arr[k1 % nx, k2 % nx] += c
        vals = np.fft.ifft2(arr, axes=(0, 1)) * (nx * nx)
        return np.abs(vals).max(axis=(0, 1))

    def _binary(self, other: "FourierTaylorSymbol", sign: float):
        if not isinstance(other, FourierTaylorSymbol):
            return NotImplemented
        if not self.grid.matches(other.grid):
            raise GridMismatch("symbols live on different xi grids")
        out = {k: c.copy() for k, c in self.coeffs.items()}
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0.0) + sign * c
        return make_symbol(self.grid, out,
                           k_max=max(self.k_max, other.k_max),
                           tail_norm=self.tail_norm + other.tail_norm)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        out = {k: scalar * c for k, c in self.coeffs.items()}
        return make_symbol(self.grid, out, k_max=self.k_max,
                           tail_norm=abs(scalar) * self.tail_norm)

    __rmul__ = __mul__


def make_symbol(grid: XiGrid, coeffs, k_max: Optional[int] = None,
                tail_norm: float = 0.0) -> FourierTaylorSymbol:
    """Canonicalize a mode -> coefficient map into a symbol.

    Scalars broadcast over the grid; exactly-zero coefficients are
    pruned.  k_max defaults to the largest |k|_inf actually present.
    """
    clean: Dict[Mode, np.ndarray] = {}
    for k, c in coeffs.items():
        key = (int(k[0]), int(k[1]))
        arr = np.asarray(c, dtype=complex)
        if arr.ndim == 0:
            arr = np.full((grid.n1, grid.n2), complex(arr))
        if arr.shape != (grid.n1, grid.n2):
            raise GridMismatch(
                f"coefficient shape {arr.shape} does not match the "
                f"{grid.n1} x {grid.n2} grid")
        if np.abs(arr).max() == 0.0:
            continue
        clean[key] = arr
    k_inf = max((max(abs(k[0]), abs(k[1])) for k in clean), default=0)
    if k_max is None:
        k_max = k_inf
    elif k_inf > k_max:
        raise DomainError(f"mode {k_inf} exceeds the cutoff {k_max}")
    return FourierTaylorSymbol(grid=grid, k_max=int(k_max), coeffs=clean,
                               tail_norm=float(tail_norm))


def xi_symbol(grid: XiGrid,
              values: Union[float, np.ndarray, Callable]) -> FourierTaylorSymbol:
    """x-independent symbol from a scalar, an array, or f(Xi1, Xi2)."""
    if callable(values):
        x1, x2 = grid.meshes()
        values = values(x1, x2)
    return make_symbol(grid, {_ZERO: values})


def mode_symbol(grid: XiGrid, k: Mode,
                values: Union[float, np.ndarray, Callable]) -> FourierTaylorSymbol:
    """Single-mode symbol c(xi) e^{i k.x}."""
    if callable(values):
        x1, x2 = grid.meshes()
        values = values(x1, x2)
    return make_symbol(grid, {(int(k[0]), int(k[1])): values})


def average_x2(sym: FourierTaylorSymbol) -> FourierTaylorSymbol:
    """Keep exactly the k2 = 0 modes."""
    kept = {k: c for k, c in sym.coeffs.items() if k[1] == 0}
    return make_symbol(sym.grid, kept, k_max=sym.k_max)


def average_x1(sym: FourierTaylorSymbol) -> FourierTaylorSymbol:
    """Keep exactly the k1 = 0 modes."""
    kept = {k: c for k, c in sym.coeffs.items() if k[0] == 0}
    return make_symbol(sym.grid, kept, k_max=sym.k_max)


def x2_dependent_part(sym: FourierTaylorSymbol) -> FourierTaylorSymbol:
    kept = {k: c for k, c in sym.coeffs.items() if k[1] != 0}
    return make_symbol(sym.grid, kept, k_max=sym.k_max)


def _xi_gradients(grid: XiGrid, c: np.ndarray):
    d1 = np.gradient(c, grid.xi1, axis=0, edge_order=2)
    d2 = np.gradient(c, grid.xi2, axis=1, edge_order=2)
    return d1, d2


def poisson_bracket(f: FourierTaylorSymbol, g: FourierTaylorSymbol,
                    k_max: Optional[int] = None) -> FourierTaylorSymbol:
    """{f, g} with spectral x-derivatives and centered xi-differences.

    Product modes beyond the cutoff are dropped; their mass lands in the
    result's tail_norm.  The cutoff defaults to the larger of the two
    inputs' cutoffs.
    """
    if not f.grid.matches(g.grid):
        raise GridMismatch("bracket of symbols on different xi grids")
    grid = f.grid
    km = max(f.k_max, g.k_max) if k_max is None else int(k_max)
    fd = {k: _xi_gradients(grid, c) for k, c in f.coeffs.items()}
    gd = {k: _xi_gradients(grid, c) for k, c in g.coeffs.items()}
    out: Dict[Mode, np.ndarray] = {}
    for (k1, k2), cf in f.coeffs.items():
        df1, df2 = fd[(k1, k2)]
        for (l1, l2), cg in g.coeffs.items():
            dg1, dg2 = gd[(l1, l2)]
            term = (df1 * (1j * l1 * cg) + df2 * (1j * l2 * cg)
                    - (1j * k1 * cf) * dg1 - (1j * k2 * cf) * dg2)
            key = (k1 + l1, k2 + l2)
            out[key] = out.get(key, 0.0) + term
    kept = {k: c for k, c in out.items()
            if max(abs(k[0]), abs(k[1])) <= km}
    tail = sum(float(np.abs(c).max()) for k, c in out.items()
               if max(abs(k[0]), abs(k[1])) > km)
    return make_symbol(grid, kept, k_max=km, tail_norm=tail)


def _frequency_fields(p: FourierTaylorSymbol):
    if not p.is_x_independent:
        raise DomainError("p must be an x-independent (xi only) symbol")
    c = p.coeff(_ZERO)
    if np.abs(c.imag).max() > 1e-12 * max(1.0, np.abs(c.real).max()):
        raise DomainError("p must be real-valued")
    return _xi_gradients(p.grid, c.real)


def hamilton_apply(p: FourierTaylorSymbol,
                   sym: FourierTaylorSymbol) -> FourierTaylorSymbol:
    """H_p sym for x-independent p: mode k is multiplied by i p'(xi).k."""
    if not p.grid.matches(sym.grid):
        raise GridMismatch("symbols live on different xi grids")
    dp1, dp2 = _frequency_fields(p)
    out = {k: 1j * (k[0] * dp1 + k[1] * dp2) * c
           for k, c in sym.coeffs.items() if k != _ZERO}
    return make_symbol(sym.grid, out, k_max=sym.k_max)


def solve_homological(p: FourierTaylorSymbol, rhs: FourierTaylorSymbol,
                      floor: float = 1e-6):
    """Modewise solve of H_p G = rhs away from small divisors.

    G gets rhs_k / (i p'.k) wherever |p'(xi).k| >= floor; grid points
    under the floor keep their rhs mass in the returned `dropped` symbol,
    so H_p G + dropped reproduces rhs minus its x-average exactly.  The
    (0,0) mode of rhs is ignored (it is the obstruction, not an error).
    """
    if floor <= 0.0:
        raise DomainError("divisor floor must be positive")
    if not p.grid.matches(rhs.grid):
        raise GridMismatch("symbols live on different xi grids")
    dp1, dp2 = _frequency_fields(p)
    sol: Dict[Mode, np.ndarray] = {}
    dropped: Dict[Mode, np.ndarray] = {}
    for k, c in rhs.coeffs.items():
        if k == _ZERO:
            continue
        div = k[0] * dp1 + k[1] * dp2
        ok = np.abs(div) >= floor
        if ok.any():
            g = np.zeros_like(c)
            g[ok] = c[ok] / (1j * div[ok])
            sol[k] = g
        if (~ok).any():
            d = np.zeros_like(c)
            d[~ok] = c[~ok]
            dropped[k] = d
    return (make_symbol(p.grid, sol, k_max=rhs.k_max),
            make_symbol(p.grid, dropped, k_max=rhs.k_max))


@dataclass(frozen=True)
class ReductionReport:
    """Residual bookkeeping for a secular reduction run."""

    order: int
    dropped_norms: Tuple[float, ...]
    step_residuals: Tuple[float, ...]
    initial_residual: float
    final_residual: float


def secular_reduce(p: FourierTaylorSymbol, q: FourierTaylorSymbol,
                   eps: float, N: int, lie_order: int,
                   floor: float = 1e-6, k_cap: Optional[int] = None):
    """Push the x2-dependence of p + i eps q to higher order, N times.

    Step j extracts the x2-dependent part R of the current symbol,
    solves H_p G_j = R / (i eps^j), and composes with the truncated Lie
    series sum_n (i eps^j)^n / n! ad_{G_j}^n.  Returns the composed
    symbol and a report of per-step dropped-divisor mass and remaining
    x2-dependent norm; a step that fails to shrink the residual raises
    DivergenceWarning through the warnings machinery.
    """
    if N < 1:
        raise DomainError("at least one reduction step required")
    if lie_order < N + 1:
        raise DomainError("lie_order must be at least N + 1")
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if not p.grid.matches(q.grid):
        raise GridMismatch("symbols live on different xi grids")
    if k_cap is None:
        k_cap = 3 * max(1, q.k_max)
    current = p + (1j * eps) * q
    initial = current.x2_dependent_norm()
    res_prev = initial
    dropped_norms = []
    step_residuals = []
    for j in range(1, N + 1):
        scale = eps ** j
        rhs = x2_dependent_part(current) * (1.0 / (1j * scale))
        gen, dropped = solve_homological(p, rhs, floor)
        dropped_norms.append(dropped.norm() * scale)
        term = current
        composed = current
        for n in range(1, lie_order + 1):
            term = poisson_bracket(gen, term, k_max=k_cap)
            composed = composed + ((1j * scale) ** n / math.factorial(n)) * term
        current = composed
        res = current.x2_dependent_norm()
        step_residuals.append(res)
        if res > res_prev:
            warnings.warn(
                f"reduction step {j} residual {res:.3e} exceeds "
                f"predecessor {res_prev:.3e}", DivergenceWarning)
        res_prev = res
    report = ReductionReport(order=N, dropped_norms=tuple(dropped_norms),
                             step_residuals=tuple(step_residuals),
                             initial_residual=initial,
                             final_residual=step_residuals[-1])
    return current, report


def gt_weight(p: FourierTaylorSymbol, q: FourierTaylorSymbol, T: float,
              kernel: str = "bump") -> FourierTaylorSymbol:
    """Finite-time averaging weight G_T.

    Modewise G_T(k) = T J(T p'.k) q_k with J(tau) = (1 - K_hat(tau)) /
    (i tau) and J(0) = 0, so that H_p G_T = q - <q>_{T,K} exactly in
    this calculus.  Evenness of the kernel is what makes J(0) = 0 the
    continuous limit rather than a convention.
    """
    if T < 1.0:
        raise DomainError("averaging time T must be at least 1")
    if not p.grid.matches(q.grid):
        raise GridMismatch("symbols live on different xi grids")
    dp1, dp2 = _frequency_fields(p)
    out: Dict[Mode, np.ndarray] = {}
    for k, c in q.coeffs.items():
        if k == _ZERO:
            continue
        tau = T * (k[0] * dp1 + k[1] * dp2)
        khat = kernel_hat(kernel, tau.ravel()).reshape(tau.shape)
        jw = np.zeros_like(c)
        nz = tau != 0.0
        jw[nz] = (1.0 - khat[nz]) / (1j * tau[nz])
        out[k] = T * jw * c
    return make_symbol(p.grid, out, k_max=q.k_max)


def kernel_average(p: FourierTaylorSymbol, q: FourierTaylorSymbol, T: float,
                   kernel: str = "bump") -> FourierTaylorSymbol:
    """<q>_{T,K}: mode k weighted by K_hat(T p'.k); the k = 0 modes pass."""
    if not p.grid.matches(q.grid):
        raise GridMismatch("symbols live on different xi grids")
    dp1, dp2 = _frequency_fields(p)
    out: Dict[Mode, np.ndarray] = {}
    for k, c in q.coeffs.items():
        tau = T * (k[0] * dp1 + k[1] * dp2)
        khat = kernel_hat(kernel, tau.ravel()).reshape(tau.shape)
        out[k] = khat * c
    return make_symbol(p.grid, out, k_max=q.k_max)


def _one_orbit(surface: SurfaceProfile, E: float, F: float, nx: int):
    """Sample one meridian period at nx uniform times.

    Returns (s values, periodic theta drift rho, total theta advance,
    period).  The period comes from the action-type quadrature, so the
    integration endpoint is a genuine closure test for the orbit.
    """
    a = abs(F) / math.sqrt(E)
    s_lo, s_hi = turning_points(surface, a)
    F2 = F * F

    def inv_speed(s):
        u = surface.u(s)
        return 0.5 / np.sqrt(np.maximum(E - F2 / (u * u), 1e-300))

    period = 2.0 * turning_point_integral(inv_speed, s_lo, s_hi, tol=1e-12)

    def rhs(t, y):
        s = y[0]
        u, du, _ = surface.evaluate(np.asarray(s))
        u3 = u ** 3
        return (2.0 * y[1], 2.0 * F2 * du / u3, 2.0 * F / (u * u))

    t_eval = np.linspace(0.0, period, nx, endpoint=False)
    sol = solve_ivp(rhs, (0.0, period), (s_lo, 0.0, 0.0), method="DOP853",
                    rtol=1e-12, atol=1e-13,
                    t_eval=np.append(t_eval, period))
    if not sol.success:
        raise IntegrationFailure(f"orbit integration failed: {sol.message}")
    closure = abs(sol.y[0][-1] - s_lo)
    if closure > 1e-7 * max(1.0, s_hi - s_lo):
        raise IntegrationFailure(
            f"orbit failed to close: endpoint off by {closure:.2e}")
    svals = sol.y[0][:nx]
    theta = sol.y[2]
    theta_total = float(theta[-1])
    rho = theta[:nx] - theta_total * t_eval / period
    return svals, rho, theta_total, period


def action_angle_symbols(surface: SurfaceProfile, q: Observable,
                         grid: XiGrid, k1_max: int, nx: int = 256):
    """Sample p(xi) and q(x, xi) in action-angle coordinates.

    xi1 is the meridian action, xi2 the angular momentum.  p comes from
    inverting the action map pointwise; q is expanded by one orbit
    integration per grid point, with the fiber angle written as
    x2 + rho(x1) and the meridian profile transformed by FFT in x1 up
    to |k1| <= k1_max.  The grid must stay off the degenerate lines
    xi1 = 0 and xi2 = 0.
    """
    if grid.xi1.min() <= 0.0:
        raise DomainError("xi1 (meridian action) must be positive")
    if np.abs(grid.xi2).min() < 1e-9:
        raise DomainError("grid touches the polar-orbit line xi2 = 0")
    if nx <= 4 * max(k1_max, 1):
        raise DomainError("x1 sample count too small for the mode cutoff")
    k2_vals = sorted({0} | {int(t.theta_freq) for t in q.terms
                      if t.theta_kind != "const" and t.theta_freq != 0})
    k_out = max(k1_max, q.theta_degree)
    evals = np.empty((grid.n1, grid.n2))
    coeffs: Dict[Mode, np.ndarray] = {}

    def slot(k: Mode) -> np.ndarray:
        if k not in coeffs:
            coeffs[k] = np.zeros((grid.n1, grid.n2), dtype=complex)
        return coeffs[k]

    for i, i1 in enumerate(grid.xi1):
        for j, f_ang in enumerate(grid.xi2):
            E = invert_actions(surface, float(i1), float(f_ang))
            evals[i, j] = E
            svals, rho, _, _ = _one_orbit(surface, E, float(f_ang), nx)
            profiles: Dict[int, np.ndarray] = {
                k2: np.zeros(nx, dtype=complex) for k2 in k2_vals}
            for term in q.terms:
                amp_s = term.amp * term.s_part(svals)
                n = int(term.theta_freq)
                if term.theta_kind == "const" or n == 0:
                    profiles[0] += amp_s
                    continue
                phase = np.exp(1j * n * rho)
                if term.theta_kind == "cos":
                    profiles[n] += 0.5 * amp_s * phase
                    profiles.setdefault(-n, np.zeros(nx, dtype=complex))
                    profiles[-n] += 0.5 * amp_s / phase
                else:
                    profiles[n] += amp_s * phase / 2j
                    profiles.setdefault(-n, np.zeros(nx, dtype=complex))
                    profiles[-n] -= amp_s / phase / 2j
            for k2, prof in profiles.items():
                fk = np.fft.fft(prof) / nx
                for k1 in range(-k1_max, k1_max + 1):
                    c = fk[k1 % nx]
                    if c != 0.0:
                        slot((k1, k2))[i, j] = c
    p_sym = xi_symbol(grid, evals)
    q_sym = make_symbol(grid, coeffs, k_max=k_out)
    return p_sym, q_sym
