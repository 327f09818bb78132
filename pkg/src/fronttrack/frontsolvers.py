"""Accurate and simplified approximate Riemann solvers producing fronts."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .system import IsentropicEuler, State, distance
from .wavecurves import CLOSENESS_RADIUS, forward_wave_curve, solve_riemann

SHOCK = "shock"
RAREFACTION = "rarefaction"
NONPHYSICAL = "non-physical"
NP_FAMILY = 3

# strengths below this are treated as absent waves
ZERO_STRENGTH = 1e-12


@dataclass(eq=False)
class Front:
    """A straight discontinuity x(t) = x0 + speed * (t - t0) between two constant states."""

    id: int
    family: int
    kind: str
    strength: float
    left: State
    right: State
    birth: tuple[float, float]
    speed: float
    t0: Optional[float] = None
    x0: Optional[float] = None
    prev: Optional["Front"] = field(default=None, repr=False)
    next: Optional["Front"] = field(default=None, repr=False)

    def __post_init__(self):
        if self.t0 is None:
            self.t0, self.x0 = self.birth

    @property
    def physical(self) -> bool:
        return self.family != NP_FAMILY

    @property
    def is_shock(self) -> bool:
        return self.kind == SHOCK

    def position(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)

    def reanchor(self, t: float, speed: float):
        """Change speed from time t on, keeping the path continuous."""
        self.x0 = self.position(t)
        self.t0 = t
        self.speed = speed


@dataclass
class FanResult:
    fronts: list[Front]
    states: list[State]


def rh_speed(left: State, right: State) -> float:
    """Rankine-Hugoniot speed from the mass equation."""
    return (right.mom - left.mom) / (right.rho - left.rho)


def _new_ids(ids):
    return ids if ids is not None else itertools.count(1)


def _shock_speed(system, front, shifts):
    if shifts is None:
        return rh_speed(front.left, front.right)
    return shifts.birth_speed(system, front)


def build_fan(system: IsentropicEuler, u_minus: State, sigma1: float, sigma2: float,
              u_end: State, delta: float, birth: tuple[float, float],
              shifts=None, ids: Iterator[int] | None = None) -> FanResult:
    """Fronts for the fan u_minus -> T_1(sigma1) -> T_2(sigma2) = u_end.

    Rarefactions of strength |sigma| are split into ceil(|sigma|/delta) sub-fronts,
    each moving with the characteristic speed of its right state.
    """
    if not delta > 0:
        raise ValueError(f"rarefaction cap must be > 0, got {delta}")
    ids = _new_ids(ids)
    fronts: list[Front] = []
    states = [u_minus]
    middle = forward_wave_curve(system, u_minus, 1, sigma1)
    for family, sigma, start, end in ((1, sigma1, u_minus, middle), (2, sigma2, middle, u_end)):
        if abs(sigma) <= ZERO_STRENGTH:
            continue
        if sigma > 0:
            fr = Front(next(ids), family, SHOCK, sigma, states[-1], end, birth, 0.0)
            fr.speed = _shock_speed(system, fr, shifts)
            fronts.append(fr)
            states.append(end)
            continue
        # a strength exceeding delta by round-off only does not earn an extra piece
        pieces = max(1, math.ceil((-sigma - ZERO_STRENGTH) / delta))
        for l in range(1, pieces + 1):
            u_l = end if l == pieces else forward_wave_curve(system, start, family, l * sigma / pieces)
            lam = system.lambdas(u_l)[family - 1]
            fronts.append(Front(next(ids), family, RAREFACTION, sigma / pieces, states[-1], u_l, birth, lam))
            states.append(u_l)
    if fronts and states[-1] != u_end:
        _retarget_right(system, fronts[-1], u_end, shifts)
        states[-1] = u_end
    return FanResult(fronts, states)


def _retarget_right(system, front, u_right, shifts):
    """Absorb a round-off mismatch into the right state of a newborn front."""
    front.right = u_right
    if front.kind == SHOCK:
        front.speed = _shock_speed(system, front, shifts)
    elif front.kind == RAREFACTION:
        front.speed = system.lambdas(u_right)[front.family - 1]


def accurate_solve(system: IsentropicEuler, u_minus: State, u_plus: State, delta: float,
                   birth: tuple[float, float], shifts=None, ids: Iterator[int] | None = None,
                   radius: float = CLOSENESS_RADIUS) -> FanResult:
    """Resolve the Riemann problem (u_minus, u_plus) into shock fronts and split rarefactions."""
    fan = solve_riemann(system, u_minus, u_plus, radius=radius)
    return build_fan(system, u_minus, fan.sigma1, fan.sigma2, u_plus, delta, birth, shifts, ids)


def simplified_solve(system: IsentropicEuler, incoming: list[Front], u_minus: State, u_plus: State,
                     delta: float, birth: tuple[float, float], lambda_hat: float, shifts=None,
                     ids: Iterator[int] | None = None) -> FanResult:
    """Keep the incoming physical strengths and close the fan with a non-physical front.

    The incoming i-strengths are summed per family (non-physical fronts count
    zero), the fan u_minus -> u' is built as in the accurate solver and a front
    of speed ``lambda_hat`` joins u' to u_plus.
    """
    ids = _new_ids(ids)
    sums = {1: 0.0, 2: 0.0}
    for fr in incoming:
        if fr.physical:
            sums[fr.family] += fr.strength
    middle = forward_wave_curve(system, u_minus, 1, sums[1])
    u_prime = forward_wave_curve(system, middle, 2, sums[2])
    fan = build_fan(system, u_minus, sums[1], sums[2], u_prime, delta, birth, shifts, ids)
    np_front = Front(next(ids), NP_FAMILY, NONPHYSICAL, distance(u_prime, u_plus),
                     fan.states[-1], u_plus, birth, lambda_hat)
    fan.fronts.append(np_front)
    fan.states.append(u_plus)
    return fan
