"""Confront computed spectra with quasi-eigenvalue predictions.

Three layers of comparison live here.  `match_lattice` pairs eigenvalues
with lattice points inside a spectral window by optimal assignment and
reports the worst matched distance together with both leftover sets.
`count_rational_window` and `scaling_fit` implement the counting side:
how many eigenvalues land in a rational-level rectangle and how that
count scales with the perturbation strength.  `good_value_check` screens
a level F0 of the torus average against the separation and
nondegeneracy conditions that uniform window asymptotics require,
working entirely from a classical scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .classical import RATIONAL, UNRESOLVED, ClassicalScan, ScanRow
from .errors import DegenerateFit, DomainError, ScanTooCoarse
from .quantization import Lattice, QuasiEigenvalue
from .spectra import SpectrumResult

__all__ = [
    "WindowSpec", "MatchPair", "MatchReport", "ScalingFit",
    "ConditionReport", "GoodValueVerdict",
    "window", "match_lattice", "count_rational_window", "scaling_fit",
    "good_value_check",
]


# ---------------------------------------------------------------------------
# spectral windows


@dataclass(frozen=True)
class WindowSpec:
    """Rectangle [E_c - eps/C, E_c + eps/C] x i eps [F0 -+ eps^delta / C].

    delta = 0 gives the counting rectangle; delta > 0 shrinks the
    imaginary extent for the bijection regime.  The real center E_c is
    explicit because the spectra of interest live near E of order one
    rather than near zero.
    """

    F0: float
    C: float
    eps: float
    delta: float = 0.0
    E_center: float = 0.0

    def __post_init__(self):
        if self.C <= 1.0:
            raise DomainError("window constant C must exceed 1")
        if self.eps <= 0.0:
            raise DomainError("window eps must be positive")
        if self.delta < 0.0:
            raise DomainError("window delta must be nonnegative")

    @property
    def rect(self) -> Tuple[float, float, float, float]:
        """(re_lo, re_hi, im_lo, im_hi)."""
        rw = self.eps / self.C
        iw = self.eps * self.eps ** self.delta / self.C
        return (self.E_center - rw, self.E_center + rw,
                self.eps * self.F0 - iw, self.eps * self.F0 + iw)

    def contains(self, z: complex) -> bool:
        re_lo, re_hi, im_lo, im_hi = self.rect
        return re_lo <= z.real <= re_hi and im_lo <= z.imag <= im_hi


def window(F0: float, C: float, eps: float, delta: float = 0.0,
           E_center: float = 0.0) -> WindowSpec:
    return WindowSpec(F0=float(F0), C=float(C), eps=float(eps),
                      delta=float(delta), E_center=float(E_center))


# ---------------------------------------------------------------------------
# lattice matching


@dataclass(frozen=True)
class MatchPair:
    eigenvalue: complex
    point: QuasiEigenvalue
    distance: float


@dataclass(frozen=True)
class MatchReport:
    """Optimal pairing between a spectrum and a lattice inside a window.

    Distances use the window metric: real differences enter at face
    value, imaginary differences are divided by eps so both mismatch
    directions are commensurate with the scales on which the prediction
    is sharp.  The pairing is a bijection between the matched subsets.
    """

    pairs: Tuple[MatchPair, ...]
    max_distance: float
    unmatched_spectrum: Tuple[complex, ...]
    unmatched_lattice: Tuple[QuasiEigenvalue, ...]
    metric_im_scale: float = 1.0

    @property
    def n_matched(self) -> int:
        return len(self.pairs)


def _window_filter(values, w: Optional[WindowSpec], key=lambda v: v):
    if w is None:
        return list(values)
    return [v for v in values if w.contains(key(v))]


def match_lattice(spectrum: SpectrumResult, lattice: Lattice,
                  w: Optional[WindowSpec] = None) -> MatchReport:
    """Optimal assignment of eigenvalues to lattice points.

    Both inputs are restricted to w.rect first; w = None matches over
    everything with the unscaled Euclidean metric.  The assignment
    minimizes the total distance over injective pairings (Hungarian
    solve on the bipartite matrix); lattice columns are ordered by
    (k1, k2) so ties resolve the same way on every run.
    """
    spec = spectrum.expanded()
    eigs = _window_filter(list(np.asarray(spec.eigenvalues)), w)
    pts = _window_filter(lattice.entries, w, key=lambda p: p.z)
    pts.sort(key=lambda p: (p.k1, p.k2))
    eigs.sort(key=lambda z: (z.real, z.imag))

    iscale = 1.0 / w.eps if w is not None else 1.0
    if not eigs or not pts:
        return MatchReport(pairs=(), max_distance=0.0,
                           unmatched_spectrum=tuple(eigs),
                           unmatched_lattice=tuple(pts),
                           metric_im_scale=iscale)

    ze = np.asarray(eigs)
    zl = np.asarray([p.z for p in pts])
    dre = ze.real[:, None] - zl.real[None, :]
    dim = (ze.imag[:, None] - zl.imag[None, :]) * iscale
    cost = np.hypot(dre, dim)
    rows, cols = linear_sum_assignment(cost)

    pairs = tuple(MatchPair(eigenvalue=complex(ze[i]), point=pts[j],
                            distance=float(cost[i, j]))
                  for i, j in zip(rows, cols))
    used_e = set(int(i) for i in rows)
    used_l = set(int(j) for j in cols)
    return MatchReport(
        pairs=pairs,
        max_distance=max(p.distance for p in pairs),
        unmatched_spectrum=tuple(complex(ze[i]) for i in range(len(eigs))
                                 if i not in used_e),
        unmatched_lattice=tuple(pts[j] for j in range(len(pts))
                                if j not in used_l),
        metric_im_scale=iscale)


# ---------------------------------------------------------------------------
# window counting and the scaling fit


def count_rational_window(spectrum: SpectrumResult, F0: float, C: float,
                          eps: float, E_center: float = 0.0) -> int:
    """Eigenvalues in the delta = 0 rectangle centered at (E_c, i eps F0)."""
    w = window(F0, C, eps, 0.0, E_center)
    spec = spectrum.expanded()
    return sum(1 for z in np.asarray(spec.eigenvalues) if w.contains(z))


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares exponent of count * h^2 against eps on log axes."""

    points: Tuple[Tuple[float, float, int], ...]
    gamma: float
    r_squared: float


def scaling_fit(points: Sequence[Tuple[float, float, int]]) -> ScalingFit:
    """Fit count * h^2 ~ eps^gamma over (eps, h, count) rows.

    Needs at least three rows and at least two distinct eps; counts must
    be positive since the fit lives on log axes.
    """
    rows = [(float(e), float(h), int(c)) for e, h, c in points]
    if len(rows) < 3:
        raise DomainError("scaling fit needs at least 3 points")
    eps = np.array([r[0] for r in rows])
    if np.ptp(eps) == 0.0:
        raise DegenerateFit("all eps equal; exponent is undetermined")
    if any(r[2] <= 0 for r in rows):
        raise DomainError("counts must be positive for a log-log fit")
    x = np.log(eps)
    y = np.log([r[2] * r[1] ** 2 for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # flat data fitted exactly: report 1, not 0/0
    r2 = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    return ScalingFit(points=tuple(rows), gamma=float(slope),
                      r_squared=r2)


# ---------------------------------------------------------------------------
# good-value screening


@dataclass(frozen=True)
class ConditionReport:
    name: str
    ok: bool
    witness: str = ""
    a: float = math.nan


@dataclass(frozen=True)
class GoodValueVerdict:
    """Outcome of the four separation conditions for a level F0.

    `good` is the conjunction; `conditions` holds one report per bullet
    with the first failing witness inside.  The rational height cutoff
    is 1/alpha and is recorded here so downstream output can show which
    constant was used.
    """

    F0: float
    alpha: float
    beta: float
    gamma: float
    d: float
    height_cutoff: float
    good: bool
    conditions: Tuple[ConditionReport, ...]

    @property
    def first_failure(self) -> Optional[ConditionReport]:
        for c in self.conditions:
            if not c.ok:
                return c
        return None


def _in_qinf(row: ScanRow, F0: float) -> bool:
    return row.qinf_lo <= F0 <= row.qinf_hi


def _fd_slope(xs: np.ndarray, ys: np.ndarray, i: int) -> float:
    # centered where possible, one-sided at the scan ends
    j0 = max(i - 1, 0)
    j1 = min(i + 1, len(xs) - 1)
    if xs[j1] == xs[j0]:
        return 0.0
    return (ys[j1] - ys[j0]) / (xs[j1] - xs[j0])


def good_value_check(scan: ClassicalScan, F0: float, alpha: float,
                     beta: float, gamma: float, d: float) -> GoodValueVerdict:
    """Screen F0 against the four good-value conditions.

    Working from the scan alone: (1) near the singular ends of the
    scanned family F0 must avoid the flow-average interval entirely;
    (2) any irrational torus whose interval captures F0 must carry a
    Diophantine certificate at least as strong as (alpha, d) and have
    average slope at least alpha in the family parameter; (3) any
    rational torus capturing F0 must have height at most 1/alpha,
    rotation-number slope at least alpha and center at least alpha away
    from F0; (4) every torus farther than beta from the capturing family
    must keep its interval at distance gamma from F0.  The ends of the
    scanned a-range stand in for the singular set, so the scan has to
    reach the degenerate tori for condition 1 to mean anything.
    """
    if alpha <= 0.0 or beta <= 0.0 or gamma <= 0.0:
        raise DomainError("alpha, beta, gamma must be positive")
    rows: List[ScanRow] = sorted(scan.rows, key=lambda r: r.a)
    if len(rows) < 3:
        raise ScanTooCoarse("need at least 3 scan rows")
    avals = np.array([r.a for r in rows])
    spacing = float(np.max(np.diff(avals)))
    # the 1e-12 slack keeps exact-quarter grids from tripping on roundoff
    if spacing > beta / 4.0 * (1.0 + 1e-12):
        raise ScanTooCoarse(
            f"scan spacing {spacing:.3g} exceeds beta/4 = {beta / 4.0:.3g}")
    if any(math.isnan(r.qinf_lo) for r in rows):
        raise DomainError("scan lacks flow-average columns; rerun with T > 0")

    omegas = np.array([r.omega for r in rows])
    qavgs = np.array([r.q_avg for r in rows])
    height_cutoff = 1.0 / alpha
    conds: List[ConditionReport] = []

    # (1) the interval must miss F0 outright near the singular ends
    ok1, wit1, a1 = True, "", math.nan
    a_lo, a_hi = avals[0], avals[-1]
    for r in rows:
        near_end = (r.a - a_lo <= alpha) or (a_hi - r.a <= alpha)
        if near_end and _in_qinf(r, F0):
            ok1, wit1, a1 = False, (
                f"F0 = {F0:g} inside [{r.qinf_lo:g}, {r.qinf_hi:g}] "
                f"at a = {r.a:g} near the family edge"), r.a
            break
    conds.append(ConditionReport("edge_avoidance", ok1, wit1, a1))

    captured = [i for i, r in enumerate(rows) if _in_qinf(r, F0)]

    # (2) irrational capturing tori: certificate strength and average slope
    ok2, wit2, a2 = True, "", math.nan
    for i in captured:
        r = rows[i]
        kind = r.rotation_class.kind
        if kind == RATIONAL:
            continue
        if kind == UNRESOLVED:
            ok2, wit2, a2 = False, (
                f"capturing torus at a = {r.a:g} has unresolved rotation "
                f"number {r.omega:.12g}"), r.a
            break
        if r.rotation_class.alpha < alpha or r.rotation_class.d > d:
            ok2, wit2, a2 = False, (
                f"certificate ({r.rotation_class.alpha:g}, "
                f"{r.rotation_class.d:g}) at a = {r.a:g} weaker than "
                f"({alpha:g}, {d:g})"), r.a
            break
        slope = abs(_fd_slope(avals, qavgs, i))
        if slope < alpha:
            ok2, wit2, a2 = False, (
                f"|d<q>/da| = {slope:.3g} < alpha at a = {r.a:g}"), r.a
            break
    conds.append(ConditionReport("diophantine_capture", ok2, wit2, a2))

    # (3) rational capturing tori: height, isoenergetic slope, separation
    ok3, wit3, a3 = True, "", math.nan
    for i in captured:
        r = rows[i]
        if r.rotation_class.kind != RATIONAL:
            continue
        height = r.rotation_class.height
        if height > height_cutoff:
            ok3, wit3, a3 = False, (
                f"rational height {height} exceeds 1/alpha = "
                f"{height_cutoff:g} at a = {r.a:g}"), r.a
            break
        slope = abs(_fd_slope(avals, omegas, i))
        if slope < alpha:
            ok3, wit3, a3 = False, (
                f"|domega/da| = {slope:.3g} < alpha at a = {r.a:g}"), r.a
            break
        if abs(F0 - r.q_avg) < alpha:
            ok3, wit3, a3 = False, (
                f"|F0 - <q>| = {abs(F0 - r.q_avg):.3g} < alpha at "
                f"a = {r.a:g}"), r.a
            break
    conds.append(ConditionReport("rational_capture", ok3, wit3, a3))

    # (4) tori far from the capturing family keep distance gamma
    ok4, wit4, a4 = True, "", math.nan
    cap_a = avals[captured] if captured else np.array([])
    for i, r in enumerate(rows):
        if cap_a.size and np.min(np.abs(cap_a - r.a)) <= beta:
            continue
        dist = max(r.qinf_lo - F0, F0 - r.qinf_hi, 0.0)
        if dist < gamma:
            ok4, wit4, a4 = False, (
                f"interval [{r.qinf_lo:g}, {r.qinf_hi:g}] at a = {r.a:g} "
                f"comes within {dist:.3g} < gamma of F0"), r.a
            break
    conds.append(ConditionReport("far_field_gap", ok4, wit4, a4))

    return GoodValueVerdict(
        F0=float(F0), alpha=float(alpha), beta=float(beta),
        gamma=float(gamma), d=float(d), height_cutoff=height_cutoff,
        good=all(c.ok for c in conds), conditions=tuple(conds))
