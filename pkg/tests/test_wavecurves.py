import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from fronttrack.errors import DomainError, RangeError
from fronttrack.system import State, distance
from fronttrack.wavecurves import (compose, forward_wave_curve, integrate_rarefaction, rarefaction_curve,
                                   shock_curve, solve_riemann, wave_curve_point)


def rh_residual(system, a, b, speed):
    fa, fb = np.array(system.flux(a)), np.array(system.flux(b))
    return float(np.linalg.norm(fb - fa - speed * (np.array(b) - np.array(a))))


def hugoniot_by_angle(system, anchor, s, n=4000):
    """All points at chord s from anchor satisfying RH, found by scanning directions."""
    fa = np.array(system.flux(anchor))

    def cross(theta):
        d = np.array([math.cos(theta), math.sin(theta)])
        u = State(*(np.array(anchor) + s * d))
        jump = np.array(system.flux(u)) - fa
        return jump[0] * d[1] - jump[1] * d[0]
    thetas = np.linspace(-math.pi, math.pi, n)
    vals = [cross(t) for t in thetas]
    pts = []
    for k in range(n - 1):
        if vals[k] == 0 or vals[k] * vals[k + 1] < 0:
            th = brentq(cross, thetas[k], thetas[k + 1], xtol=1e-15)
            pts.append(State(*(np.array(anchor) + s * np.array([math.cos(th), math.sin(th)]))))
    return pts


def test_zero_strength_points(euler):
    u = State(1.0, 0.0)
    p = shock_curve(euler, u, 1, 0.0)
    assert p.state == u and p.speed == pytest.approx(-math.sqrt(2))
    assert rarefaction_curve(euler, u, 2, 0.0).state == u
    assert forward_wave_curve(euler, u, 1, 0.0) == u


@pytest.mark.parametrize("family", [1, 2])
def test_shock_matches_angular_hugoniot_scan(euler, family):
    anchor, s = State(1.0, 0.0), 0.1
    p = shock_curve(euler, anchor, family, s)
    candidates = hugoniot_by_angle(euler, anchor, s)
    lam = lambda u: euler.lambdas(u)[family - 1]
    admissible = []
    for u in candidates:
        speed = (u.mom - anchor.mom) / (u.rho - anchor.rho)
        if lam(u) < speed < lam(anchor):
            admissible.append(u)
    assert len(admissible) == 1
    assert distance(admissible[0], p.state) <= 1e-9
    assert rh_residual(euler, anchor, p.state, p.speed) <= 1e-10
    assert lam(p.state) < p.speed < lam(anchor)


@pytest.mark.parametrize("family", [1, 2])
def test_shock_arclength_and_entropy(euler, family, rng):
    for _ in range(50):
        anchor = State(*rng.uniform((0.6, -0.5), (2.5, 0.5)))
        s = rng.uniform(0.0, 0.3)
        p = shock_curve(euler, anchor, family, s)
        assert abs(distance(anchor, p.state) - s) <= 1e-8
        diss = (euler.entropy_flux(p.state) - euler.entropy_flux(anchor)
                - p.speed * (euler.entropy(p.state) - euler.entropy(anchor)))
        assert diss <= 1e-12


def test_right_anchored_shock(euler):
    anchor = State(1.0, 0.1)
    p = shock_curve(euler, anchor, 2, 0.1, side="right")
    left = p.state
    assert rh_residual(euler, left, anchor, p.speed) <= 1e-10
    lam2 = lambda u: euler.lambdas(u)[1]
    assert lam2(anchor) < p.speed < lam2(left)


@pytest.mark.parametrize("family,side,sign", [(1, "left", -1), (2, "right", 1)])
def test_shock_speed_monotone_in_strength(euler, family, side, sign):
    anchor = State(1.2, 0.1)
    speeds = [shock_curve(euler, anchor, family, s, side=side).speed for s in np.linspace(0.01, 0.4, 40)]
    assert np.all(sign * np.diff(speeds) > 0)


def test_rarefaction_keeps_invariant(euler):
    anchor = State(1.0, 0.0)
    w2 = euler.riemann_invariants(anchor)[1]
    p = rarefaction_curve(euler, anchor, 1, 0.2)
    assert abs(euler.riemann_invariants(p.state)[1] - w2) <= 1e-8
    assert p.speed > euler.lambdas(anchor)[0]
    assert abs(p.s - 0.2) < 1e-15


@pytest.mark.parametrize("family", [1, 2])
def test_rarefaction_matches_rk4(euler, family, rng):
    for _ in range(10):
        anchor = State(*rng.uniform((0.6, -0.5), (2.5, 0.5)))
        s = rng.uniform(0.01, 0.3)
        exact = rarefaction_curve(euler, anchor, family, s).state
        ode, err = integrate_rarefaction(euler, anchor, family, s)
        assert err <= 1e-10
        assert distance(exact, ode) <= 1e-10


@pytest.mark.parametrize("family", [1, 2])
def test_forward_curve_is_smooth_at_zero(euler, family):
    u = State(1.1, 0.2)
    h = 1e-4

    def one_sided(sign):
        p1 = np.array(forward_wave_curve(euler, u, family, sign * h))
        p2 = np.array(forward_wave_curve(euler, u, family, sign * 2 * h))
        return sign * (-3 * np.array(u) + 4 * p1 - p2) / (2 * h)
    assert np.linalg.norm(one_sided(1) - one_sided(-1)) <= 1e-6


def test_riemann_trivial_and_single_waves(euler):
    u = State(1.0, 0.0)
    fan = solve_riemann(euler, u, u)
    assert (fan.sigma1, fan.sigma2, fan.middle) == (0.0, 0.0, u)
    fan = solve_riemann(euler, u, shock_curve(euler, u, 1, 0.05).state)
    assert fan.sigma1 == pytest.approx(0.05, abs=1e-8) and abs(fan.sigma2) <= 1e-8
    fan = solve_riemann(euler, u, rarefaction_curve(euler, u, 2, 0.05).state)
    assert fan.sigma2 == pytest.approx(-0.05, abs=1e-8) and abs(fan.sigma1) <= 1e-8


@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(0.6, 3.0), st.floats(-1.0, 1.0))
def test_riemann_round_trip(s1, s2, rho, v):
    from fronttrack.system import IsentropicEuler
    system = IsentropicEuler()
    u = State(rho, rho * v)
    target = compose(system, u, s1, s2)
    fan = solve_riemann(system, u, target)
    assert abs(fan.sigma1 - s1) <= 1e-7 and abs(fan.sigma2 - s2) <= 1e-7
    assert distance(compose(system, u, fan.sigma1, fan.sigma2), target) <= 1e-10
    assert distance(fan.middle, forward_wave_curve(system, u, 1, fan.sigma1)) <= 1e-12


def test_riemann_errors(euler):
    with pytest.raises(RangeError):
        solve_riemann(euler, State(1.0, 0.0), State(2.0, 0.0))
    with pytest.raises(DomainError):
        solve_riemann(euler, State(0.0, 0.0), State(1.0, 0.0))


def test_rarefaction_to_vacuum_is_range_error(euler):
    with pytest.raises(RangeError):
        rarefaction_curve(euler, State(0.3, 0.0), 1, 5.0)


def test_wave_curve_point_dispatch(euler):
    u = State(1.0, 0.0)
    assert wave_curve_point(euler, u, 1, 0.1).state == shock_curve(euler, u, 1, 0.1).state
    assert wave_curve_point(euler, u, 1, -0.1).state == rarefaction_curve(euler, u, 1, 0.1).state
