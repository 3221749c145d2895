"""Fourier-Taylor symbol calculus: brackets, homological equations,
secular reduction, and the finite-time averaging weight.

Identities that hold exactly in this calculus (projections, the
homological solve, the G_T relation) are asserted exactly; anything
passing through the finite-difference xi derivatives gets a bound at
the measured finite-difference floor.
"""

import math
import warnings

import numpy as np
import pytest

from revspec.classical import torus_average
from revspec.errors import (DivergenceWarning, DomainError, GridMismatch,
                            IntegrationFailure)
from revspec.normalform import (FourierTaylorSymbol, action_angle_symbols,
                                average_x1, average_x2, gt_weight,
                                hamilton_apply, kernel_average, make_grid,
                                make_symbol, mode_symbol, poisson_bracket,
                                secular_reduce, solve_homological, x2_dependent_part,
                                xi_symbol)
from revspec.observables import builtin_observable, make_observable

GRID = make_grid((0.3, 0.5), (0.4, 0.6), (21, 19))


def smooth_symbol(grid, kmax, tag=0.0, real=False):
    """Deterministic symbol with smooth xi dependence in every mode."""
    X1, X2 = grid.meshes()
    coeffs = {}
    ks = [(k1, k2) for k1 in range(-kmax, kmax + 1)
          for k2 in range(-kmax, kmax + 1)]
    if real:
        coeffs[(0, 0)] = np.cos(0.7 * X2 + tag) + 0.0j
        for k1, k2 in ks:
            if (k1, k2) > (0, 0):
                arr = (np.cos(k1 * X1 + 0.7 * k2 * X2 + tag)
                       + 0.3j * np.sin(X1 * X2 + k1 + tag))
                coeffs[(k1, k2)] = arr
                coeffs[(-k1, -k2)] = np.conj(arr)
    else:
        for k1, k2 in ks:
            coeffs[(k1, k2)] = (np.cos(k1 * X1 + 0.7 * k2 * X2 + tag)
                                + 0.3j * np.sin(X1 * X2 + k1 + tag))
    return make_symbol(grid, coeffs, k_max=kmax)


def standard_pair():
    """Golden-ratio frequency with a gentle twist, plus a mixed-mode q."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    sgrid = make_grid((0.125, 0.5), (0.15, 0.6), (21, 19))
    S1, S2 = sgrid.meshes()
    p = xi_symbol(sgrid, lambda a, b: b + phi * a + 0.05 * a * a)
    base = 1.0 + 0.3 * np.cos(S1 + S2)
    wob = 0.3 * np.sin(2 * S1 - S2)
    sc = {(0, 0): 0.1 * base + 0.0j}
    for (k1, k2, amp, ph) in ((0, 1, 0.20, 0.7), (1, 1, 0.15, -0.4),
                              (1, -1, 0.10, 0.2), (1, 2, 0.05, 1.1)):
        arr = amp * base * np.exp(1j * ph * wob)
        sc[(k1, k2)] = arr
        sc[(-k1, -k2)] = np.conj(arr)
    return p, make_symbol(sgrid, sc, k_max=2)


def test_averaging_projections():
    s = smooth_symbol(GRID, 2, tag=0.5)
    a2 = average_x2(s)
    assert all(k[1] == 0 for k in a2.modes)
    sx = xi_symbol(GRID, lambda a, b: a * b)
    assert average_x2(sx).modes == sx.modes
    assert average_x2(mode_symbol(GRID, (0, 1), 1.0)).norm() == 0.0
    d = average_x1(average_x2(s))
    assert d.modes == ((0, 0),)
    assert np.abs(d.coeff((0, 0)) - s.coeff((0, 0))).max() == 0.0
    # complementary projector: the two parts reassemble exactly
    back = x2_dependent_part(s) + average_x2(s)
    assert (back - s).norm() == 0.0


def test_bracket_conserved_and_modes():
    p = xi_symbol(GRID, lambda a, b: b + a * a)
    c = poisson_bracket(p, xi_symbol(GRID, lambda a, b: np.sin(a + b)))
    assert c.norm() < 1e-14
    xi1 = xi_symbol(GRID, lambda a, b: a)
    br = poisson_bracket(xi1, mode_symbol(GRID, (1, 0), 1.0))
    assert np.abs(br.coeff((1, 0)) - 1j).max() < 1e-12


def test_bracket_antisymmetry():
    f = smooth_symbol(GRID, 2, tag=0.1)
    g = smooth_symbol(GRID, 2, tag=1.3)
    anti = poisson_bracket(f, g) + poisson_bracket(g, f)
    assert anti.norm() < 1e-12


def test_bracket_jacobi():
    """Jacobi holds up to the centered-difference floor: the defect is
    O(d^2) relative to the nested brackets, and quarters when the xi
    grid is refined, which separates discretization from algebra."""
    rels = []
    for shape in ((21, 19), (41, 37)):
        grid = make_grid((0.3, 0.5), (0.4, 0.6), shape)
        f = smooth_symbol(grid, 2, tag=0.1)
        g = smooth_symbol(grid, 2, tag=1.3)
        h = smooth_symbol(grid, 1, tag=2.2)
        d1 = poisson_bracket(f, poisson_bracket(g, h, k_max=6), k_max=6)
        d2 = poisson_bracket(g, poisson_bracket(h, f, k_max=6), k_max=6)
        d3 = poisson_bracket(h, poisson_bracket(f, g, k_max=6), k_max=6)
        scale = max(d1.norm(), d2.norm(), d3.norm())
        rels.append((d1 + d2 + d3).norm() / scale)
    assert rels[0] < 2e-3
    assert rels[1] < rels[0] / 3.0


def test_homological_identity():
    p = xi_symbol(GRID, lambda a, b: b + a * a)
    rhs = smooth_symbol(GRID, 2, tag=0.7)
    G, dropped = solve_homological(p, rhs, floor=1e-6)
    lhs = hamilton_apply(p, G) + dropped
    target = rhs - average_x1(average_x2(rhs))
    assert (lhs - target).norm() < 1e-10


def test_homological_single_mode():
    p = xi_symbol(GRID, lambda a, b: b + a * a)
    X1, _ = GRID.meshes()
    G, dropped = solve_homological(p, mode_symbol(GRID, (1, 1), 1.0))
    div = 2.0 * X1 + 1.0
    assert np.abs(G.coeff((1, 1)) - 1.0 / (1j * div)).max() < 1e-12
    assert dropped.norm() == 0.0


def test_homological_small_divisor_floor():
    g0 = make_grid((0.0, 0.5), (0.4, 0.6), (21, 5))
    p0 = xi_symbol(g0, lambda a, b: b + a * a)
    G, dropped = solve_homological(p0, mode_symbol(g0, (1, 0), 1.0),
                                   floor=1e-3)
    Y1, _ = g0.meshes()
    inside = np.abs(2.0 * Y1) < 1e-3
    dc = dropped.coeff((1, 0))
    assert np.all(dc[inside] == 1.0)
    assert np.all(dc[~inside] == 0.0)
    gc = G.coeff((1, 0))
    assert np.all(gc[inside] == 0.0)


def test_secular_x_independent_passthrough():
    p, _ = standard_pair()
    qflat = xi_symbol(p.grid, lambda a, b: np.cos(a) + b)
    nf, rep = secular_reduce(p, qflat, 0.01, 2, 4)
    assert rep.final_residual == 0.0
    assert all(r == 0.0 for r in rep.step_residuals)
    assert (nf - (p + 0.01j * qflat)).norm() < 1e-15


def test_secular_eps_halving():
    """One reduction step leaves an O(eps^2) residual, so halving eps
    divides it by four."""
    p, q = standard_pair()
    assert q.reality_defect() == 0.0
    _, rep_a = secular_reduce(p, q, 0.02, 1, 3)
    _, rep_b = secular_reduce(p, q, 0.01, 1, 3)
    ratio = rep_a.step_residuals[0] / rep_b.step_residuals[0]
    assert 3.2 < ratio < 4.8


def test_secular_residual_ordering():
    p, q = standard_pair()
    _, rep = secular_reduce(p, q, 0.05, 3, 4)
    r_prev = rep.initial_residual
    for r in rep.step_residuals:
        assert r < r_prev
        r_prev = r


def test_secular_against_hand_lie_series():
    p, _ = standard_pair()
    qm = mode_symbol(p.grid, (1, 1), lambda a, b: np.cos(a + b))
    eps = 0.015
    nf, _ = secular_reduce(p, qm, eps, 1, 2)
    P0 = p + 1j * eps * qm
    G, _ = solve_homological(p, x2_dependent_part(P0) * (1.0 / (1j * eps)))
    hand = P0 + (1j * eps) * poisson_bracket(G, P0, k_max=3)
    hand = hand + ((1j * eps) ** 2 / 2.0) * poisson_bracket(
        G, poisson_bracket(G, P0, k_max=3), k_max=3)
    assert (nf - hand).norm() < 1e-10


def test_secular_gates():
    p, q = standard_pair()
    with pytest.raises(DomainError):
        secular_reduce(p, q, 0.01, 0, 3)
    with pytest.raises(DomainError):
        secular_reduce(p, q, 0.01, 3, 3)
    with pytest.raises(DomainError):
        secular_reduce(p, q, 0.0, 1, 2)
    other = smooth_symbol(GRID, 2)
    with pytest.raises(GridMismatch):
        secular_reduce(p, other, 0.01, 1, 2)


def test_divergence_warning_on_resonant_grid():
    p = xi_symbol(GRID, lambda a, b: b + a * a)
    rq = {k: np.full((GRID.n1, GRID.n2), 0.3 + 0.0j)
          for k in ((-2, 1), (2, -1), (0, 1), (0, -1))}
    qres = make_symbol(GRID, rq, k_max=2)
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        secular_reduce(p, qres, 0.05, 2, 3)
    assert any(issubclass(w.category, DivergenceWarning) for w in wlist)


def test_gt_weight_identity():
    """H_p G_T = q - <q>_{T,K} holds exactly modewise, any T."""
    p = xi_symbol(GRID, lambda a, b: b + a * a)
    q = smooth_symbol(GRID, 2, tag=0.9, real=True)
    for T in (1.0, 12.0):
        GT = gt_weight(p, q, T)
        avg = kernel_average(p, q, T)
        assert (hamilton_apply(p, GT) - (q - avg)).norm() < 1e-9
        assert GT.reality_defect() < 1e-12
    assert gt_weight(p, xi_symbol(GRID, 3.0), 5.0).norm() == 0.0
    with pytest.raises(DomainError):
        gt_weight(p, q, 0.5)


def test_gt_weight_sup_bound_constant():
    """sup_x |G_T| is controlled by C (1 + T/(T |p'.k| + 1)) with one C
    serving every T; the fitted constant stays within a factor two."""
    gb = make_grid((0.0, 1.0), (0.6, 0.5), (61, 3))
    pb = xi_symbol(gb, lambda a, b: b + a * a)
    qc = {}
    for k1 in range(1, 4):
        qc[(k1, 0)] = np.full((gb.n1, gb.n2), 0.5 / k1 + 0.0j)
        qc[(-k1, 0)] = np.full((gb.n1, gb.n2), 0.5 / k1 + 0.0j)
    qb = make_symbol(gb, qc)
    Cs = []
    for T in (10.0, 100.0, 1000.0):
        GT = gt_weight(pb, qb, T)
        sup = GT.sup_x_abs(nx=32)
        shape = 1.0 + T / (T * np.abs(gb.xi1) + 1.0)
        Cs.append(float(np.max(sup.max(axis=1) / shape)))
    assert max(Cs) / min(Cs) < 2.0


def test_grid_guards():
    with pytest.raises(DomainError):
        make_grid((0.0, 0.0), (1.0, 1.0), (2, 5))
    with pytest.raises(DomainError):
        make_grid((0.0, 0.0), (0.0, 1.0), (5, 5))
    a = smooth_symbol(GRID, 1)
    b = smooth_symbol(make_grid((0.3, 0.5), (0.4, 0.6), (11, 9)), 1)
    with pytest.raises(GridMismatch):
        poisson_bracket(a, b)


def test_action_angle_sphere_energy(sphere):
    """On the round sphere E(I1, F) = (I1 + |F|)^2 exactly."""
    q = builtin_observable("cos2s")
    grid = make_grid((0.45, 0.35), (0.2, 0.1), (4, 3))
    p_sym, _ = action_angle_symbols(sphere, q, grid, 2, nx=128)
    X1, X2 = grid.meshes()
    expect = (X1 + np.abs(X2)) ** 2
    assert np.abs(p_sym.coeff((0, 0)) - expect).max() < 1e-9


def test_action_angle_rotational_average(b02):
    """The (0, 0) coefficient of a theta-independent observable is its
    invariant torus average at matching (E, F)."""
    q = builtin_observable("cos2s")
    grid = make_grid((0.5, 0.4), (0.2, 0.1), (3, 3))
    p_sym, q_sym = action_angle_symbols(b02, q, grid, 3, nx=128)
    assert all(k[1] == 0 for k in q_sym.modes)
    E = p_sym.coeff((0, 0)).real
    c00 = q_sym.coeff((0, 0))
    assert np.abs(c00.imag).max() < 1e-10
    for i in (0, 2):
        for j in (0, 2):
            a = grid.xi2[j] / math.sqrt(E[i, j])
            want = torus_average(b02, q, a)
            assert c00[i, j].real == pytest.approx(want, abs=1e-8)


def test_action_angle_parity(b02):
    """u(pi - s) = u(s) forces s(x1 + pi) = pi - s(x1) and rho(x1 + pi)
    = rho(x1) along every orbit, so cos(j s) e^{i n rho} carries only x1
    harmonics k1 with j + k1 even."""
    q = make_observable([(1.0, "cos:2", "cos:3")])
    grid = make_grid((0.5, 0.4), (0.2, 0.1), (3, 3))
    _, q_sym = action_angle_symbols(b02, q, grid, 4, nx=256)
    even_mass = odd_mass = 0.0
    for (k1, k2) in q_sym.modes:
        assert k2 in (-3, 3, 0)
        if k2 == 0:
            continue
        mass = float(np.abs(q_sym.coeff((k1, k2))).max())
        if (2 + k1) % 2 == 0:
            even_mass = max(even_mass, mass)
        else:
            odd_mass = max(odd_mass, mass)
    assert even_mass > 1e-3
    # zero up to the orbit integration tolerance
    assert odd_mass < 1e-10


def test_action_angle_gates(b02):
    q = builtin_observable("cos2s")
    bad1 = make_grid((0.1, 0.4), (0.4, 0.1), (3, 3))  # xi1 hits <= 0
    with pytest.raises(DomainError):
        action_angle_symbols(b02, q, bad1, 2)
    bad2 = make_grid((0.5, 0.0), (0.2, 0.4), (3, 5))  # xi2 crosses 0
    with pytest.raises(DomainError):
        action_angle_symbols(b02, q, bad2, 2)
    good = make_grid((0.5, 0.4), (0.2, 0.1), (3, 3))
    with pytest.raises(DomainError):
        action_angle_symbols(b02, q, good, 4, nx=16)
