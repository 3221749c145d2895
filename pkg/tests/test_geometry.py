import math

import numpy as np
import pytest

from revspec.errors import DegenerateTorus, DomainError, InvalidProfile
from revspec.geometry import (embedding_curve, make_profile, symbol_p,
                              turning_points)


def test_sphere_profile(sphere):
    assert sphere.L == math.pi
    assert abs(sphere.s0 - math.pi / 2) < 1e-12
    assert abs(sphere.u_max - 1.0) < 1e-12
    s = np.linspace(0.01, math.pi - 0.01, 200)
    assert np.abs(sphere.u(s) - np.sin(s)).max() < 1e-14


def test_deformed_profile(b02):
    # u' = cos(s)(1 + 3 beta sin^2 s) whose factor stays positive at
    # beta = 0.2, so the only critical point is the equator
    assert abs(b02.s0 - math.pi / 2) < 1e-10
    assert abs(b02.u_max - 1.2) < 1e-12
    s = np.linspace(0.0, math.pi, 1001)
    du_exact = np.cos(s) * (1.0 + 0.6 * np.sin(s) ** 2)
    _, du, _ = b02.evaluate(s)
    assert np.abs(du - du_exact).max() < 1e-12
    off = s[np.abs(s - b02.s0) > 0.05]
    assert np.all(np.abs(np.cos(off) * (1.0 + 0.6 * np.sin(off) ** 2)) > 0.0)


def test_endpoint_slopes(sphere, b02):
    for surf in (sphere, b02):
        _, du0, _ = surf.evaluate(np.array(0.0))
        _, duL, _ = surf.evaluate(np.array(surf.L))
        assert abs(float(du0) - 1.0) < 1e-12
        assert abs(float(duL) + 1.0) < 1e-12


def test_unique_maximum(b02):
    for delta in (-0.4, -0.05, 0.05, 0.4):
        assert float(b02.u(b02.s0 + delta)) < b02.u_max


def test_slope_band(b02):
    # the deformed family overshoots |u'| = 1 slightly in the interior;
    # construction admits it up to the documented 1.05 band
    s = np.linspace(0.0, b02.L, 4001)
    _, du, _ = b02.evaluate(s)
    assert (du * du).max() <= 1.05
    assert (du * du).max() > 1.0


def test_overdeformed_rejected():
    # at beta = -0.5 the derivative factor 1 - 1.5 sin^2 s vanishes at
    # sin^2 s = 2/3, giving extra critical points
    with pytest.raises(InvalidProfile):
        make_profile("deformed-sphere", (-0.5,))


def test_unknown_family():
    with pytest.raises(InvalidProfile):
        make_profile("torus")


def test_symbol_values(sphere, b02):
    assert symbol_p(sphere, math.pi / 2, 0.0, 1.0) == pytest.approx(1.0)
    # u(pi/6) = 1/2 on the sphere: tangency point of the a = 1/2 torus
    assert symbol_p(sphere, math.pi / 6, 0.0, 0.5) == pytest.approx(
        1.0, abs=1e-12)
    assert symbol_p(b02, 0.3, 1.0, 0.0) == 1.0


def test_symbol_domain(sphere):
    with pytest.raises(DomainError):
        symbol_p(sphere, 0.0, 0.3, 0.5)
    with pytest.raises(DomainError):
        symbol_p(sphere, -0.1, 0.0, 0.0)
    rng = np.random.default_rng(7)
    for _ in range(50):
        s = rng.uniform(0.05, math.pi - 0.05)
        assert symbol_p(sphere, s, rng.normal(), rng.normal()) >= 0.0


def test_turning_points_sphere(sphere):
    s_lo, s_hi = turning_points(sphere, 0.5)
    assert abs(s_lo - math.pi / 6) < 1e-12
    assert abs(s_hi - 5 * math.pi / 6) < 1e-12


def test_turning_points_tangency(b02):
    # symbol equals E at the turning points with sigma = 0, theta* = a sqrt(E)
    E = 1.3
    for a in (0.25, 0.6, 1.0):
        s_lo, s_hi = turning_points(b02, a)
        for s in (s_lo, s_hi):
            assert symbol_p(b02, s, 0.0, a * math.sqrt(E)) == pytest.approx(
                E, abs=1e-10)


def test_turning_points_monotone(b02):
    grid = np.linspace(0.1, 1.15, 12)
    pts = [turning_points(b02, a) for a in grid]
    lows = [p[0] for p in pts]
    highs = [p[1] for p in pts]
    assert all(x < y for x, y in zip(lows, lows[1:]))
    assert all(x > y for x, y in zip(highs, highs[1:]))
    for a, (s_lo, s_hi) in zip(grid, pts):
        assert s_lo < b02.s0 < s_hi
        assert abs(float(b02.u(s_lo)) - a) < 1e-12
        assert abs(float(b02.u(s_hi)) - a) < 1e-12


def test_turning_points_degenerate(sphere):
    with pytest.raises(DegenerateTorus):
        turning_points(sphere, 1.0 - 1e-13)
    with pytest.raises(DomainError):
        turning_points(sphere, 1.5)
    with pytest.raises(DomainError):
        turning_points(sphere, 0.0)


def test_embedding_curve(sphere):
    """On the round sphere the meridian is the half circle
    (v, u) = (1 - cos s, sin s) up to the quadrature step."""
    s, u, v = embedding_curve(sphere, 2001)
    assert v[0] == 0.0
    assert np.abs(u - np.sin(s)).max() < 1e-14
    assert np.abs(v - (1.0 - np.cos(s))).max() < 1e-5
    assert np.all(np.diff(v) >= 0.0)
