"""Shock and rarefaction curves, composite forward wave curves and the exact Riemann solver.

Strength conventions: a positive strength is a shock, a negative one a
rarefaction, and ``|strength|`` is the distance travelled along the curve.  On
the shock branch that distance is the chord ``|u - anchor|``; on the
rarefaction branch it is the arclength of the integral curve of the unit
eigenvector field.  Both branches leave the anchor along the same unit tangent,
so the composite curve is C^2 through zero strength.

Rarefaction curves of isentropic Euler are level sets of a Riemann invariant,
which lets us parametrize them by density and invert the arclength with
Newton's method and Gauss-Legendre quadrature.  ``integrate_rarefaction`` is
the plain RK4 integration of du/ds = r(u), kept as an independent route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError, RangeError
from .system import IsentropicEuler, State, distance

CLOSENESS_RADIUS = 0.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class WaveCurvePoint:
    state: State
    speed: float
    s: float


@dataclass(frozen=True)
class RiemannFanSpec:
    sigma1: float
    sigma2: float
    middle: State
    residual: float = 0.0


def _check_family(family):
    if family not in (1, 2):
        raise ValueError(f"family must be 1 or 2, got {family!r}")


def _require_interior(system, u, what="state"):
    if not system.in_open_region(u):
        raise DomainError(f"{what} {tuple(u)} is not in the open invariant region")


def _hugoniot_jump(system, rho_a, rho_o):
    """|v_o - v_a| for two states joined by a Rankine-Hugoniot discontinuity."""
    g = system.gamma
    return math.sqrt((rho_o ** g - rho_a ** g) * (rho_o - rho_a) / (rho_a * rho_o))


def _hugoniot_state(system, anchor, side, rho_o):
    v_a = anchor.mom / anchor.rho
    jump = _hugoniot_jump(system, anchor.rho, rho_o)
    v_o = v_a - jump if side == "left" else v_a + jump
    return State(rho_o, rho_o * v_o)


def shock_curve(system: IsentropicEuler, anchor: State, family: int, s: float,
                side: str = "left") -> WaveCurvePoint:
    """Point at chord distance ``s`` on the admissible Hugoniot branch.

    ``side="left"`` treats the anchor as the left state and returns the right
    state; ``side="right"`` treats it as the right state and returns the left
    state.  The returned speed is the Rankine-Hugoniot speed.
    """
    _check_family(family)
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if s < 0:
        raise ValueError(f"arclength must be >= 0, got {s}")
    _require_interior(system, anchor, "anchor")
    if s == 0:
        lam = system.lambdas(anchor)[family - 1]
        return WaveCurvePoint(anchor, lam, 0.0)

    compressive = (family == 1) == (side == "left")
    rho_a = anchor.rho

    def excess(rho_o):
        return distance(anchor, _hugoniot_state(system, anchor, side, rho_o)) - s

    # the chord is at least |d rho|, so rho_a +- s brackets the root
    if compressive:
        rho_end = rho_a + s
    else:
        rho_end = rho_a - s
        if rho_end <= 0:
            rho_end = 1e-12 * rho_a
            if excess(rho_end) < 0:
                raise RangeError(f"{family}-shock of strength {s} from {tuple(anchor)} reaches vacuum")
    if excess(rho_end) < 0:
        # only possible when s is below the floating-point resolution of rho
        return WaveCurvePoint(anchor, system.lambdas(anchor)[family - 1], s)
    rho_o = brentq(excess, rho_a, rho_end, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    u = _hugoniot_state(system, anchor, side, rho_o)
    if not system.in_open_region(u):
        raise RangeError(f"{family}-shock of strength {s} from {tuple(anchor)} leaves the invariant region")
    if rho_o == rho_a:
        # s below the density resolution: the characteristic speed is the limit
        return WaveCurvePoint(u, system.lambdas(anchor)[family - 1], s)
    speed = (u.mom - anchor.mom) / (u.rho - anchor.rho)
    return WaveCurvePoint(u, speed, s)


def _fan_invariant(system, anchor, family):
    """Riemann invariant that stays constant along the family's rarefaction curve."""
    k = 2.0 / (system.gamma - 1.0)
    c = system.sound_speed(anchor.rho)
    v = anchor.mom / anchor.rho
    return v + k * c if family == 1 else v - k * c


def _fan_velocity(system, w, family, rho):
    k = 2.0 / (system.gamma - 1.0)
    c = system.sound_speed(rho)
    return w - k * c if family == 1 else w + k * c


def _fan_speed(system, w, family, rho):
    k1 = 2.0 / (system.gamma - 1.0) + 1.0
    c = system.sound_speed(rho)
    return w - k1 * c if family == 1 else w + k1 * c


def _fan_arclength(system, w, family, rho_a, rho_b):
    """Arclength of the rarefaction curve between densities rho_a and rho_b."""
    lo, hi = (rho_a, rho_b) if rho_a <= rho_b else (rho_b, rho_a)
    if hi == lo:
        return 0.0
    panels = min(64, 1 + int(4.0 * (hi - lo) / lo))
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    lam = _fan_speed(system, w, family, nodes)
    vals = np.sqrt(1.0 + lam * lam).reshape(panels, -1)
    return float(np.sum(half * (vals @ _GL_W)))


def rarefaction_curve(system: IsentropicEuler, anchor: State, family: int, s: float,
                      method: str = "invariant") -> WaveCurvePoint:
    """Point at arclength ``s`` along the family's rarefaction curve from ``anchor``.

    The characteristic speed of the family increases along the curve.
    ``method="rk4"`` integrates du/ds = r(u) instead.
    """
    _check_family(family)
    if s < 0:
        raise ValueError(f"arclength must be >= 0, got {s}")
    _require_interior(system, anchor, "anchor")
    if method == "rk4":
        u, _ = integrate_rarefaction(system, anchor, family, s)
        if not system.in_open_region(u):
            raise RangeError(f"{family}-rarefaction of length {s} leaves the invariant region")
        return WaveCurvePoint(u, system.lambdas(u)[family - 1], s)
    if method != "invariant":
        raise ValueError(f"unknown method {method!r}")
    if s == 0:
        return WaveCurvePoint(anchor, system.lambdas(anchor)[family - 1], 0.0)

    w = _fan_invariant(system, anchor, family)
    direction = -1.0 if family == 1 else 1.0
    rho_a = anchor.rho
    lam_a = _fan_speed(system, w, family, rho_a)
    rho = rho_a + direction * s / math.hypot(1.0, lam_a)
    if rho <= 0:
        rho = 0.5 * rho_a
    for _ in range(60):
        resid = _fan_arclength(system, w, family, rho_a, rho) - s
        lam = _fan_speed(system, w, family, rho)
        step = resid / (direction * math.hypot(1.0, lam))
        new = rho - step
        if new <= 0:
            new = 0.5 * rho
            if new < 1e-12 * rho_a:
                raise RangeError(f"1-rarefaction of length {s} from {tuple(anchor)} reaches vacuum")
        if abs(new - rho) <= 1e-15 * rho_a:
            rho = new
            break
        rho = new
    else:
        raise NumericalError("rarefaction arclength inversion did not converge", abs(resid))
    u = State(rho, rho * _fan_velocity(system, w, family, rho))
    if not system.in_open_region(u):
        raise RangeError(f"{family}-rarefaction of length {s} from {tuple(anchor)} leaves the invariant region")
    return WaveCurvePoint(u, _fan_speed(system, w, family, rho), s)


def integrate_rarefaction(system: IsentropicEuler, anchor: State, family: int, s: float,
                          steps: int = 64) -> tuple[State, float]:
    """RK4 integration of du/ds = r_family(u); returns (state, step-doubling error estimate)."""
    _check_family(family)
    sign = -1.0 if family == 1 else 1.0

    def field(rho, mom):
        if rho <= 0:
            raise RangeError("rarefaction integration reached vacuum")
        lam = system.lambdas(State(rho, mom))[family - 1]
        n = math.hypot(1.0, lam)
        return sign / n, sign * lam / n

    def run(n):
        h = s / n
        r, m = anchor
        for _ in range(n):
            k1 = field(r, m)
            k2 = field(r + 0.5 * h * k1[0], m + 0.5 * h * k1[1])
            k3 = field(r + 0.5 * h * k2[0], m + 0.5 * h * k2[1])
            k4 = field(r + h * k3[0], m + h * k3[1])
            r += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            m += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return State(r, m)

    if s == 0:
        return anchor, 0.0
    coarse = run(steps)
    fine = run(2 * steps)
    return fine, distance(coarse, fine) / 15.0


def wave_curve_point(system: IsentropicEuler, u: State, family: int, sigma: float) -> WaveCurvePoint:
    """T_family(sigma)(u) together with the wave speed and |sigma|."""
    if sigma > 0:
        return shock_curve(system, u, family, sigma, side="left")
    if sigma < 0:
        return rarefaction_curve(system, u, family, -sigma)
    _check_family(family)
    return WaveCurvePoint(u, system.lambdas(u)[family - 1], 0.0)


def forward_wave_curve(system: IsentropicEuler, u: State, family: int, sigma: float) -> State:
    """Right state reached from left state ``u`` by a family wave of signed strength ``sigma``."""
    if sigma == 0:
        _check_family(family)
        return u
    return wave_curve_point(system, u, family, sigma).state


def compose(system: IsentropicEuler, u: State, sigma1: float, sigma2: float) -> State:
    """T_2(sigma2) o T_1(sigma1) (u)."""
    return forward_wave_curve(system, forward_wave_curve(system, u, 1, sigma1), 2, sigma2)


def solve_riemann(system: IsentropicEuler, u_minus: State, u_plus: State,
                  radius: float = CLOSENESS_RADIUS, tol: float = 1e-10) -> RiemannFanSpec:
    """Signed strengths (sigma1, sigma2) with u_plus = T_2(sigma2) T_1(sigma1) u_minus.

    The middle density is found by bracketed root finding on the velocity
    mismatch between the forward 1-curve of u_minus and the backward 2-curve
    of u_plus; both are monotone in density.
    """
    _require_interior(system, u_minus, "u_minus")
    _require_interior(system, u_plus, "u_plus")
    if u_minus == u_plus:
        return RiemannFanSpec(0.0, 0.0, u_minus, 0.0)
    gap = distance(u_minus, u_plus)
    if gap > radius:
        raise RangeError(f"states are {gap:.4g} apart, beyond the closeness radius {radius}")

    rho_l, rho_r = u_minus.rho, u_plus.rho
    v_l, v_r = u_minus.mom / rho_l, u_plus.mom / rho_r
    w2_l = _fan_invariant(system, u_minus, 1)
    w1_r = _fan_invariant(system, u_plus, 2)

    def v_left(rho):
        if rho >= rho_l:
            return v_l - _hugoniot_jump(system, rho_l, rho)
        return _fan_velocity(system, w2_l, 1, rho)

    def v_right(rho):
        if rho >= rho_r:
            return v_r + _hugoniot_jump(system, rho_r, rho)
        return _fan_velocity(system, w1_r, 2, rho)

    def mismatch(rho):
        return v_left(rho) - v_right(rho)

    lo, hi = min(rho_l, rho_r), max(rho_l, rho_r)
    for _ in range(200):
        if mismatch(hi) <= 0:
            break
        hi *= 1.5
    else:
        raise NumericalError("could not bracket the middle density from above")
    for _ in range(200):
        if mismatch(lo) >= 0:
            break
        lo /= 1.5
        if lo < 1e-12:
            raise RangeError("Riemann problem generates vacuum")
    else:
        raise NumericalError("could not bracket the middle density from below")
    if mismatch(lo) == 0:
        rho_m = lo
    elif mismatch(hi) == 0:
        rho_m = hi
    else:
        rho_m = brentq(mismatch, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    middle = State(rho_m, rho_m * v_left(rho_m))
    if not system.in_open_region(middle):
        raise RangeError(f"middle state {tuple(middle)} leaves the invariant region")

    if rho_m > rho_l:
        sigma1 = distance(u_minus, middle)
    elif rho_m < rho_l:
        sigma1 = -_fan_arclength(system, w2_l, 1, rho_m, rho_l)
    else:
        sigma1 = 0.0
    if rho_m > rho_r:
        sigma2 = distance(middle, u_plus)
    elif rho_m < rho_r:
        sigma2 = -_fan_arclength(system, w1_r, 2, rho_m, rho_r)
    else:
        sigma2 = 0.0

    residual = distance(compose(system, u_minus, sigma1, sigma2), u_plus)
    if residual > tol:
        raise NumericalError("Riemann reconstruction failed", residual)
    return RiemannFanSpec(sigma1, sigma2, middle, residual)
