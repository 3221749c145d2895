"""Finite-difference discretizations of -h^2 Laplace + i eps q and their
complex spectra.

Separating the angular mode e^{i m theta} leaves a 1D operator on the
meridian.  Two discretizations are provided and cross-checked:

* "weighted": conservative second-order differences for
  -h^2 u^{-1} d/ds (u d/ds) + h^2 m^2/u^2 on the staggered grid
  s_i = (i - 1/2) ds, with the profile evaluated at cell faces and the
  matrix symmetrized by conjugation with sqrt(u).  The face values vanish
  at the poles, which encodes the correct boundary behavior for every m
  with no explicit boundary condition.  This is the production form.

* "liouville": conjugation by u^{1/2} first, then plain central
  differences for -h^2 d^2/ds^2 + h^2 (m^2 - 1/4)/u^2 + h^2 W with
  W = u''/(2u) + (1 - u'^2)/(4 u^2) and Dirichlet ends.  Clean for
  convergence-order experiments, but the bare grid does not resolve the
  attractive -1/(4u^2) tail at the poles for |m| <= 1, where only the
  weighted form converges.

Both give complex symmetric tridiagonal matrices (real symmetric plus
i eps diag(q)), which the eigensolver exploits: eigenvalues of the real
part seed a batched Newton iteration on the tridiagonal determinant, and
inverse iteration certifies every reported pair by its residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eig, eigh_tridiagonal, solve_banded

from .errors import (ConvergenceFailure, DomainError, GridTooCoarse,
                     SizeLimit)
from .geometry import SurfaceProfile
from .observables import Observable

DENSE_CAP = 6000
RESIDUAL_TOL = 1e-8

COUPLED = "coupled-2d"


@dataclass(frozen=True)
class OperatorMatrix:
    n: int
    mode: Union[int, str]
    h: float
    eps: float
    form: str
    grid_n: int
    ds: float
    q_id: str
    diag: Optional[np.ndarray] = field(default=None, repr=False)
    off: Optional[np.ndarray] = field(default=None, repr=False)
    dense: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def is_tridiagonal(self) -> bool:
        return self.diag is not None

    @property
    def entries(self) -> np.ndarray:
        """Dense complex matrix (materialized on demand for tridiagonal)."""
        if self.dense is not None:
            return self.dense
        a = np.diag(self.diag.astype(complex))
        a[np.arange(self.n - 1), np.arange(1, self.n)] = self.off
        a[np.arange(1, self.n), np.arange(self.n - 1)] = self.off
        return a

    def norm_inf(self) -> float:
        if self.dense is not None:
            return float(np.max(np.sum(np.abs(self.dense), axis=1)))
        e = np.abs(self.off)
        row = np.abs(self.diag).copy()
        row[:-1] += e
        row[1:] += e
        return float(np.max(row))


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    modes: Tuple[Union[int, str], ...]
    residuals: np.ndarray
    params: dict
    symmetry_doubled: bool = False

    def expanded(self) -> "SpectrumResult":
        """Duplicate m > 0 rows as -m so multiplicities are explicit."""
        if not self.symmetry_doubled:
            return self
        lam, mod, res = [], [], []
        for z, m, r in zip(self.eigenvalues, self.modes, self.residuals):
            lam.append(z)
            mod.append(m)
            res.append(r)
            if isinstance(m, int) and m > 0:
                lam.append(z)
                mod.append(-m)
                res.append(r)
        order = np.argsort(np.asarray(lam).real, kind="stable")
        return SpectrumResult(eigenvalues=np.asarray(lam)[order],
                              modes=tuple(np.asarray(mod, dtype=object)[order]),
                              residuals=np.asarray(res)[order],
                              params=dict(self.params),
                              symmetry_doubled=False)


def _weighted_tridiag(surface: SurfaceProfile, h: float, m: int, N: int):
    ds = surface.L / N
    faces = ds * np.arange(N + 1)
    centers = ds * (np.arange(N) + 0.5)
    uf = surface.u(faces)
    uc = surface.u(centers)
    h2 = h * h
    main = h2 * ((uf[:-1] + uf[1:]) / (uc * ds * ds) + (m * m) / (uc * uc))
    off = -h2 * uf[1:-1] / (ds * ds * np.sqrt(uc[:-1] * uc[1:]))
    return main, off, centers, ds


def _liouville_tridiag(surface: SurfaceProfile, h: float, m: int, N: int):
    ds = surface.L / N
    nodes = ds * np.arange(1, N)
    u, du, d2u = surface.evaluate(nodes)
    w = 0.5 * d2u / u + (1.0 - du * du) / (4.0 * u * u)
    h2 = h * h
    main = 2.0 * h2 / (ds * ds) + h2 * ((m * m - 0.25) / (u * u) + w)
    off = np.full(N - 2, -h2 / (ds * ds))
    return main, off, nodes, ds


def _check_grid(surface: SurfaceProfile, h: float, N: int, E_ref: float):
    if N < 200:
        raise DomainError("grid size below 200")
    # local wavelength at energy E_ref is 2 pi h / sqrt(E_ref)
    ppw = 2.0 * math.pi * h * N / (surface.L * math.sqrt(E_ref))
    if ppw < 20.0:
        raise GridTooCoarse(
            f"{ppw:.1f} grid points per wavelength at E = {E_ref:g}; "
            "need at least 20")


def mode_operator(surface: SurfaceProfile, h: float, m: int, eps: float,
                  q_s: Observable, N: int,
                  form: str = "weighted", E_ref: float = 1.0) -> OperatorMatrix:
    """1D operator on the m-th angular mode, tridiagonal storage.

    E_ref sets the energy whose wavelength the resolution check is
    measured against; pass the top of the spectral window of interest.
    """
    if not q_s.is_rotational:
        raise DomainError("mode_operator needs a theta-independent observable")
    _check_grid(surface, h, N, E_ref)
    if form == "weighted":
        main, off, nodes, ds = _weighted_tridiag(surface, h, m, N)
    elif form == "liouville":
        main, off, nodes, ds = _liouville_tridiag(surface, h, m, N)
    else:
        raise DomainError(f"unknown discretization form {form!r}")
    diag = main.astype(complex)
    if eps != 0.0:
        diag = diag + 1j * eps * q_s.theta_mean(nodes)
    return OperatorMatrix(n=diag.size, mode=m, h=h, eps=eps, form=form,
                          grid_n=N, ds=ds, q_id=q_s.ident,
                          diag=diag, off=off)


def operator_2d(surface: SurfaceProfile, h: float, eps: float, q: Observable,
                N_s: int, M_theta: int, m_center: int = 0,
                cap: int = DENSE_CAP, E_ref: float = 1.0) -> OperatorMatrix:
    """Mode-coupled block operator over angular modes m_center +- M_theta.

    Diagonal blocks carry the weighted-form 1D operator plus the rotational
    part of i eps q; the block coupling modes m1 and m2 is i eps times the
    theta-Fourier coefficient of q at k = m1 - m2.
    """
    if q.theta_degree > M_theta:
        raise DomainError("theta degree of q exceeds the mode cutoff")
    modes = list(range(m_center - M_theta, m_center + M_theta + 1))
    nb = len(modes)
    dim = nb * N_s
    if dim > cap:
        raise SizeLimit(f"coupled dimension {dim} exceeds the cap {cap}")
    _check_grid(surface, h, N_s, E_ref)

    a = np.zeros((dim, dim), dtype=complex)
    centers = None
    for i, m in enumerate(modes):
        main, off, nodes, ds = _weighted_tridiag(surface, h, m, N_s)
        centers = nodes
        sl = slice(i * N_s, (i + 1) * N_s)
        blk = np.diag(main.astype(complex))
        blk[np.arange(N_s - 1), np.arange(1, N_s)] = off
        blk[np.arange(1, N_s), np.arange(N_s - 1)] = off
        a[sl, sl] = blk
    if eps != 0.0:
        for i, m1 in enumerate(modes):
            for j, m2 in enumerate(modes):
                coeff = q.fourier_coeff(m1 - m2, centers)
                if np.any(coeff != 0.0):
                    idx = np.arange(N_s)
                    a[i * N_s + idx, j * N_s + idx] += 1j * eps * coeff
    return OperatorMatrix(n=dim, mode=COUPLED, h=h, eps=eps, form="weighted",
                          grid_n=N_s, ds=surface.L / N_s, q_id=q.ident,
                          dense=a)


def _tridiag_matvec(d, e, v):
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


def _newton_sweeps(d, e, lam, max_iter=60, floor_scale=1e-30):
    """Batched Newton on det(T - lam) via the scaled ratio recurrence.

    The log-derivative sum S = d/dlam log det gives the step -1/S; ratios
    near zero are floored so a seed sitting on a leading-submatrix
    eigenvalue takes a finite step instead of producing NaN.

    Convergence is the strict per-root threshold when attainable. When the
    diagonal carries entries far larger than the root (pole terms m^2/u^2
    do this at small ds), the step bottoms out at the roundoff floor of the
    recurrence instead; a root whose step stops shrinking there is accepted
    provided its best step already sits well under 1e-9 * max(1, |lam|).
    The residual gate downstream re-checks every accepted root.
    """
    n = d.size
    e2 = e * e
    scale = float(np.max(np.abs(d))) + 1.0
    floor = floor_scale * scale
    lam = lam.astype(complex).copy()
    active = np.ones(lam.size, dtype=bool)
    best = np.full(lam.size, np.inf)
    stalls = np.zeros(lam.size, dtype=np.int64)
    for _ in range(max_iter):
        la = lam[active]
        r = d[0] - la
        r[np.abs(r) < floor] = floor
        rp = np.full(la.size, -1.0, dtype=complex)
        s = rp / r
        for i in range(1, n):
            rp = -1.0 + e2[i - 1] * rp / (r * r)
            r = d[i] - la - e2[i - 1] / r
            small = np.abs(r) < floor
            if np.any(small):
                r[small] = floor
            s += rp / r
        step = -1.0 / s
        lam[active] = la + step
        idx = np.flatnonzero(active)
        mag = np.abs(step)
        ref = np.maximum(1.0, np.abs(la))
        improved = mag < best[idx]
        stalls[idx] = np.where(improved, 0, stalls[idx] + 1)
        best[idx] = np.minimum(best[idx], mag)
        done = mag <= 1e-13 * ref
        done |= (stalls[idx] >= 2) & (best[idx] <= 1e-9 * ref)
        active[idx[done]] = False
        if not active.any():
            return lam
    raise ConvergenceFailure(
        f"{int(active.sum())} eigenvalue corrections did not settle")


def _inverse_iteration(d, e, lam, rng):
    n = d.size
    ab = np.zeros((3, n), dtype=complex)
    shift = lam
    for attempt in range(4):
        ab[0, 1:] = e
        ab[1, :] = d - shift
        ab[2, :-1] = e
        try:
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            for _ in range(3):
                v = solve_banded((1, 1), ab, v)
                nv = np.linalg.norm(v)
                if not np.isfinite(nv) or nv == 0.0:
                    raise FloatingPointError
                v /= nv
            return v
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            shift = lam + (1e-13 * 10 ** attempt) * (1.0 + abs(lam))
    raise ConvergenceFailure(f"inverse iteration failed near {lam}")


def _solve_tridiagonal(matrix: OperatorMatrix,
                       window: Optional[Tuple[float, float]]):
    d, e = matrix.diag, matrix.off
    dr, di = d.real, d.imag
    norm = matrix.norm_inf()
    b_imag = float(np.max(np.abs(di))) if np.any(di) else 0.0

    if window is not None:
        pad = b_imag + 1e-9 * norm
        sel = dict(select="v", select_range=(window[0] - pad, window[1] + pad))
    else:
        sel = dict(select="a")
    try:
        w0, v0 = eigh_tridiagonal(dr, e, **sel)
    except Exception as exc:  # pragma: no cover - LAPACK failures are rare
        raise ConvergenceFailure(f"symmetric seed solve failed: {exc}")
    if w0.size == 0:
        return np.empty(0, dtype=complex), np.empty(0)

    if b_imag == 0.0:
        lam = w0.astype(complex)
        res = np.array([
            np.linalg.norm(_tridiag_matvec(d, e, v0[:, j]) - lam[j] * v0[:, j])
            for j in range(lam.size)]) / norm
        return lam, res

    # first-order imaginary shift from the unperturbed eigenvectors, then
    # Newton to the exact discrete eigenvalue
    first = w0 + 1j * np.einsum("ij,i,ij->j", v0, di, v0)
    lam = _newton_sweeps(d, e, first)
    lam = _deduplicate(d, e, w0, di, lam)

    rng = np.random.default_rng(7)
    res = np.empty(lam.size)
    for j in range(lam.size):
        v = _inverse_iteration(d, e, lam[j], rng)
        res[j] = np.linalg.norm(_tridiag_matvec(d, e, v) - lam[j] * v) / norm
    return lam, res


def _collided(lam: np.ndarray) -> bool:
    if lam.size < 2:
        return False
    dist = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(dist, np.inf)
    return bool(np.min(dist) <= 1e-10)


def _deduplicate(d, e, w0, di, lam):
    """Rerun as a staged homotopy in the imaginary part if seeds collided."""
    if not _collided(lam):
        return lam
    dr = d.real
    stage = w0.astype(complex)
    for frac in np.linspace(0.125, 1.0, 8):
        stage = _newton_sweeps(dr + 1j * frac * di, e, stage)
    if _collided(stage):
        raise ConvergenceFailure("eigenvalue corrections collapsed together")
    return stage


def eigensolve(matrix: OperatorMatrix,
               window: Optional[Tuple[float, float]] = None,
               cap: int = DENSE_CAP) -> SpectrumResult:
    """Complete eigendecomposition with per-pair residual certificates.

    Tridiagonal operators go through the seeded Newton path (restricted to
    a real window when given); anything else is solved densely, subject to
    the size cap.
    """
    if matrix.is_tridiagonal:
        lam, res = _solve_tridiagonal(matrix, window)
    else:
        if matrix.n > cap:
            raise SizeLimit(f"dense dimension {matrix.n} exceeds cap {cap}")
        a = matrix.entries
        lam, vecs = eig(a)
        norm = matrix.norm_inf()
        res = np.array([np.linalg.norm(a @ vecs[:, j] - lam[j] * vecs[:, j])
                        for j in range(lam.size)]) / norm
    if window is not None and lam.size:
        keep = (lam.real >= window[0]) & (lam.real <= window[1])
        lam, res = lam[keep], res[keep]
    order = np.argsort(lam.real, kind="stable")
    lam, res = lam[order], res[order]
    bad = res > RESIDUAL_TOL
    if np.any(bad):
        raise ConvergenceFailure(
            f"{int(bad.sum())} eigenpairs exceed the residual tolerance "
            f"(worst {res.max():.2e})")
    return SpectrumResult(
        eigenvalues=lam, modes=tuple([matrix.mode] * lam.size),
        residuals=res,
        params=dict(h=matrix.h, eps=matrix.eps, form=matrix.form,
                    N=matrix.grid_n, q=matrix.q_id, mode=matrix.mode))


def full_spectrum_rotational(surface: SurfaceProfile, h: float, eps: float,
                             q_s: Observable, m_max: int, N: int,
                             rect: Optional[Tuple[float, float, float, float]] = None,
                             form: str = "weighted") -> SpectrumResult:
    """Union of mode spectra for m = 0..m_max (negative m by symmetry).

    rect = (re_lo, re_hi, im_lo, im_hi) filters the result; its real part
    also restricts the per-mode solves, which is what keeps narrow-window
    runs at large N cheap.
    """
    window = (rect[0], rect[1]) if rect is not None else None
    e_ref = rect[1] if rect is not None and rect[1] > 0 else 1.0
    lam_all, mode_all, res_all = [], [], []
    for m in range(m_max + 1):
        op = mode_operator(surface, h, m, eps, q_s, N, form=form, E_ref=e_ref)
        sr = eigensolve(op, window=window)
        lam_all.append(sr.eigenvalues)
        res_all.append(sr.residuals)
        mode_all.extend([m] * sr.eigenvalues.size)
    lam = np.concatenate(lam_all) if lam_all else np.empty(0, dtype=complex)
    res = np.concatenate(res_all) if res_all else np.empty(0)
    modes = np.asarray(mode_all, dtype=object)
    if rect is not None and lam.size:
        keep = ((lam.real >= rect[0]) & (lam.real <= rect[1])
                & (lam.imag >= rect[2]) & (lam.imag <= rect[3]))
        lam, res, modes = lam[keep], res[keep], modes[keep]
    order = np.argsort(lam.real, kind="stable")
    return SpectrumResult(
        eigenvalues=lam[order], modes=tuple(modes[order]),
        residuals=res[order],
        params=dict(surface=surface.ident, q=q_s.ident, h=h, eps=eps, N=N,
                    form=form, m_max=m_max, rect=rect),
        symmetry_doubled=True)
