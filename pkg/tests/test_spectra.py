"""Discretized mode operators and the non-selfadjoint eigensolvers.

The seeded Newton path for tridiagonal operators is checked against a
dense LAPACK solve of the very same matrix, and against two solver-free
oracles: first-order perturbation theory in eps and shifted inverse
iteration.
"""

import numpy as np
import pytest
import scipy.linalg as sla

from oracles import inverse_iteration_eig, perturbation_shifts
from revspec.errors import DomainError, GridTooCoarse, SizeLimit
from revspec.observables import builtin_observable, constant, make_observable
from revspec.spectra import (eigensolve, full_spectrum_rotational,
                             mode_operator, operator_2d)


def test_newton_path_vs_dense_lapack(b02):
    q = builtin_observable("cos2s")
    op = mode_operator(b02, 0.05, 8, 0.01, q, 500)
    sr = eigensolve(op, window=(0.2, 1.5))
    w = sla.eig(op.entries, right=False)
    w = w[(w.real >= 0.2) & (w.real <= 1.5)]
    w = w[np.argsort(w.real)]
    assert sr.eigenvalues.size == w.size
    assert np.abs(sr.eigenvalues - w).max() < 1e-9
    assert sr.residuals.max() <= 1e-8


def test_constant_q_exact_shift(b02):
    """i eps times the identity commutes with everything, so the
    perturbed spectrum is a rigid vertical translation."""
    qone = constant(1.0)
    op1 = mode_operator(b02, 0.05, 3, 0.02, qone, 500)
    op0 = mode_operator(b02, 0.05, 3, 0.0, qone, 500)
    s1 = eigensolve(op1, window=(0.2, 1.5))
    s0 = eigensolve(op0, window=(0.2, 1.5))
    assert s1.eigenvalues.size == s0.eigenvalues.size
    assert np.abs(s1.eigenvalues - (s0.eigenvalues + 0.02j)).max() < 1e-11


def test_first_order_imaginary_parts(b02):
    q = builtin_observable("cos2s")
    eps = 1e-3
    op0 = mode_operator(b02, 0.05, 5, 0.0, q, 400)
    ope = mode_operator(b02, 0.05, 5, eps, q, 400)
    s_eps = eigensolve(ope, window=(0.3, 1.2))
    vals, shifts = perturbation_shifts(op0.diag.real, op0.off.real,
                                       ope.diag.imag / eps)
    keep = (vals >= 0.3) & (vals <= 1.2)
    pred = vals[keep] + 1j * eps * shifts[keep]
    assert s_eps.eigenvalues.size == pred.size
    assert np.abs(s_eps.eigenvalues - pred).max() < 1e-6


def test_rotational_q_block_diagonal(b02):
    """A theta-independent q cannot couple angular modes; each diagonal
    block must reproduce the 1D operator bit for bit."""
    q = builtin_observable("cos2s")
    N_s, M = 300, 2
    op2 = operator_2d(b02, 0.05, 0.03, q, N_s, M, m_center=4)
    a = op2.dense
    modes = list(range(2, 7))
    for i in range(len(modes)):
        for j in range(len(modes)):
            blk = a[i * N_s:(i + 1) * N_s, j * N_s:(j + 1) * N_s]
            if i == j:
                op1d = mode_operator(b02, 0.05, modes[i], 0.03, q, N_s)
                assert np.array_equal(blk, op1d.entries)
            else:
                assert np.abs(blk).max() == 0.0


def test_coupling_placement(b02):
    q = make_observable([(0.7, "cos:3", "cos:4")])
    N_s = 200
    op = operator_2d(b02, 0.05, 0.02, q, N_s, 5, m_center=0, E_ref=1.0)
    a = op.dense
    modes = list(range(-5, 6))
    for i, m1 in enumerate(modes):
        for j, m2 in enumerate(modes):
            if i == j:
                continue
            blk = a[i * N_s:(i + 1) * N_s, j * N_s:(j + 1) * N_s]
            if abs(m1 - m2) == 4:
                assert np.abs(blk).max() > 0.0
            else:
                assert np.abs(blk).max() == 0.0


def test_coupled_solve_with_inverse_iteration_oracle(b02):
    q = make_observable([(0.7, "cos:3", "cos:4")])
    op = operator_2d(b02, 0.05, 0.02, q, 200, 5, m_center=0, E_ref=1.0)
    sr = eigensolve(op, window=(0.2, 1.2))
    assert sr.residuals.max() <= 1e-8
    lam = sr.eigenvalues[np.argmin(np.abs(sr.eigenvalues - 1.0))]
    lam_orc, res = inverse_iteration_eig(op.entries, lam + 3e-4 + 2e-4j)
    assert res < 1e-10
    assert abs(lam - lam_orc) < 1e-9


def test_grid_gates(b02):
    q = builtin_observable("cos2s")
    with pytest.raises(DomainError):
        mode_operator(b02, 1.0, 0, 0.0, q, 150)
    with pytest.raises(GridTooCoarse):
        mode_operator(b02, 0.01, 0, 0.0, q, 250)
    # the same wavelength test guards the coupled builder
    with pytest.raises(GridTooCoarse):
        operator_2d(b02, 0.01, 0.0, q, 250, 1)


def test_operator_gates(b02):
    qtheta = make_observable([(0.5, "cos:1", "cos:4")])
    with pytest.raises(DomainError):
        mode_operator(b02, 0.05, 0, 0.01, qtheta, 300)
    with pytest.raises(DomainError):
        operator_2d(b02, 0.05, 0.01, qtheta, 300, 3)
    with pytest.raises(SizeLimit):
        operator_2d(b02, 0.05, 0.01, qtheta, 2100, 4)
    with pytest.raises(DomainError):
        mode_operator(b02, 0.05, 0, 0.01, builtin_observable("cos2s"),
                      300, form="spectral")


def test_dense_cap_override(b02):
    q = make_observable([(0.2, "cos:1", "cos:1")])
    op = operator_2d(b02, 0.05, 0.01, q, 200, 1)
    with pytest.raises(SizeLimit):
        eigensolve(op, cap=100)


def test_sphere_shells_small(sphere):
    """h = 1 puts the quantum sphere shells at l(l+1); each appears with
    multiplicity 2l + 1 once symmetry doubling is expanded."""
    qone = constant(1.0)
    sr = full_spectrum_rotational(sphere, 1.0, 0.0, qone, 3, 600,
                                  rect=(0.5, 13.0, -1.0, 1.0))
    assert sr.symmetry_doubled
    lam = sr.expanded().eigenvalues
    for l in (1, 2, 3):
        n = int(np.sum(np.abs(lam.real - l * (l + 1)) < 0.5))
        assert n == 2 * l + 1


def test_expanded_bookkeeping(sphere):
    qone = constant(1.0)
    sr = full_spectrum_rotational(sphere, 1.0, 0.0, qone, 2, 600,
                                  rect=(0.5, 7.0, -1.0, 1.0))
    ex = sr.expanded()
    assert not ex.symmetry_doubled
    n_pos = sum(1 for m in sr.modes if isinstance(m, int) and m > 0)
    assert ex.eigenvalues.size == sr.eigenvalues.size + n_pos
    assert np.all(np.diff(ex.eigenvalues.real) >= 0.0)
    assert sorted(set(ex.modes)) == [-2, -1, 0, 1, 2]
    # doubling preserves values: each m > 0 eigenvalue appears twice
    for z, m in zip(ex.eigenvalues, ex.modes):
        if m != 0:
            twin = [zz for zz, mm in zip(ex.eigenvalues, ex.modes)
                    if mm == -m and zz == z]
            assert twin
