"""Event-driven front tracking with an accurate/simplified collision policy.

Fronts are kept in a doubly linked list ordered by position.  Candidate
collision times of adjacent pairs live in a heap; entries are invalidated
lazily by checking that both fronts are alive, still neighbours and have not
changed speed since the entry was pushed.  All speeds are constant between
events (and optional shift refreshes), so collision times are exact.
"""
from __future__ import annotations

import bisect
import csv
import heapq
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, InternalError, NumericalError
from .frontsolvers import (NP_FAMILY, SHOCK, FanResult, Front,
                           accurate_solve, rh_speed, simplified_solve)
from .system import IsentropicEuler, State, as_state, distance
from .wavecurves import CLOSENESS_RADIUS, compose

EVENT_FIELDS = ("t", "x", "incoming_ids", "outgoing_ids", "solver_used", "dL", "dQ", "np_strength")
_TIE_CYCLE = 1024


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class PiecewiseConstant:
    """u(x) = states[k] for breakpoints[k-1] <= x < breakpoints[k]."""

    breakpoints: tuple[float, ...]
    states: tuple[State, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in self.breakpoints))
        object.__setattr__(self, "states", tuple(as_state(u) for u in self.states))
        if len(self.states) != len(self.breakpoints) + 1:
            raise ConfigError("need exactly one more state than breakpoints")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ConfigError("breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, u) -> "PiecewiseConstant":
        return cls((), (u,))

    def total_variation(self) -> float:
        return sum(distance(a, b) for a, b in zip(self.states, self.states[1:]))

    def at(self, x: float) -> State:
        return self.states[bisect.bisect_right(self.breakpoints, x)]


@dataclass(frozen=True)
class EngineParams:
    delta_nu: float = 0.05
    eps_nu: float = 1e-4
    kappa: float = 10.0
    tv_cap: float = 0.2
    max_events: int = 1_000_000
    radius: float = CLOSENESS_RADIUS
    np_prune: float = 1e-14
    tie_eps: float = 1e-12
    record_history: bool = True

    def __post_init__(self):
        for name in ("delta_nu", "kappa", "tv_cap", "radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.eps_nu >= 0:
            raise ConfigError(f"eps_nu must be >= 0, got {self.eps_nu}")
        if self.max_events < 1:
            raise ConfigError("max_events must be positive")


@dataclass(frozen=True)
class SpeedWindows:
    """Admissible shock speeds: [-lambda_hat/2, alpha1] for 1-shocks, [alpha2, lambda_hat/2] for 2-shocks."""

    lambda_hat: float
    alpha1: float
    alpha2: float
    sup_lambda1: float = -math.inf
    inf_lambda2: float = math.inf

    def bounds(self, family: int) -> tuple[float, float]:
        if family == 1:
            return -0.5 * self.lambda_hat, self.alpha1
        if family == 2:
            return self.alpha2, 0.5 * self.lambda_hat
        raise ValueError(f"no speed window for family {family}")

    def clamp(self, family: int, speed: float) -> float:
        lo, hi = self.bounds(family)
        return min(max(speed, lo), hi)


def speed_windows(system: IsentropicEuler, states: Iterable[State], margin: float,
                  n: int = 41) -> SpeedWindows:
    """Windows computed on the bounding box of ``states`` enlarged by ``margin``."""
    states = list(states)
    rho = [u.rho for u in states]
    mom = [u.mom for u in states]
    r_lo = max(min(rho) - margin, 0.5 * min(rho))
    grid_r, grid_m = np.meshgrid(np.linspace(r_lo, max(rho) + margin, n),
                                 np.linspace(min(mom) - margin, max(mom) + margin, n))
    lam1, lam2 = system.lambdas(State(grid_r, grid_m))
    sup1, inf2 = float(lam1.max()), float(lam2.min())
    gap = inf2 - sup1
    if gap <= 0:
        raise ConfigError(f"characteristic families overlap near the data (gap={gap:.3g})")
    lam_hat = system.certified.lambda_hat
    return SpeedWindows(lam_hat, sup1 + 0.25 * gap, inf2 - 0.25 * gap, sup1, inf2)


@dataclass(frozen=True)
class GlimmFunctionals:
    l: float
    q: float
    kappa: float
    np_total: float

    @property
    def potential(self) -> float:
        return self.l + self.kappa * self.q


class FrontView(NamedTuple):
    """Immutable copy of a front at a given time."""

    id: int
    family: int
    kind: str
    strength: float
    left: State
    right: State
    position: float
    speed: float

    @property
    def physical(self) -> bool:
        return self.family != NP_FAMILY

    @property
    def is_shock(self) -> bool:
        return self.kind == SHOCK


def approaching(front_a, front_b) -> bool:
    """Whether front_a (on the left) and front_b (on the right) can still collide."""
    fa, fb = front_a.family, front_b.family
    if fa > fb:
        return True
    return fa == fb and fa != NP_FAMILY and (front_a.kind == SHOCK or front_b.kind == SHOCK)


def glimm_of(fronts: Sequence, kappa: float) -> GlimmFunctionals:
    """L, Q and the non-physical total of position-ordered fronts in O(n)."""
    total = {1: 0.0, 2: 0.0, NP_FAMILY: 0.0}
    shocks = {1: 0.0, 2: 0.0}
    l = q = 0.0
    for fr in fronts:
        s = abs(fr.strength)
        fam = fr.family
        above = sum(v for f, v in total.items() if f > fam)
        if fam != NP_FAMILY:
            above += total[fam] if fr.kind == SHOCK else shocks[fam]
            if fr.kind == SHOCK:
                shocks[fam] += s
        q += s * above
        total[fam] += s
        l += s
    return GlimmFunctionals(l, q, kappa, total[NP_FAMILY])


@dataclass(frozen=True)
class Snapshot:
    """Piecewise-constant function: fronts at ``time`` and the state left of all of them."""

    time: float
    left_state: State
    fronts: tuple[FrontView, ...]

    @property
    def states(self) -> tuple[State, ...]:
        return (self.left_state,) + tuple(f.right for f in self.fronts)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([f.position for f in self.fronts], dtype=float)

    def positions_at(self, t: float) -> np.ndarray:
        return np.array([f.position + f.speed * (t - self.time) for f in self.fronts], dtype=float)

    def at_time(self, t: float) -> "Snapshot":
        """The same fronts moved to time t (valid while no event intervenes)."""
        return Snapshot(t, self.left_state, tuple(f._replace(position=f.position + f.speed * (t - self.time))
                                                  for f in self.fronts))

    def sample(self, x: float, t: Optional[float] = None) -> State:
        xs = self.breakpoints if t is None else self.positions_at(t)
        return self.states[int(np.searchsorted(xs, x, side="right"))]

    def total_variation(self) -> float:
        st = self.states
        return sum(distance(a, b) for a, b in zip(st, st[1:]))

    def glimm(self, kappa: float) -> GlimmFunctionals:
        return glimm_of(self.fronts, kappa)

    def to_json(self, weights: Optional[Sequence[float]] = None) -> dict:
        out = {
            "time": self.time,
            "breakpoints": [f.position for f in self.fronts],
            "states": [[u.rho, u.mom] for u in self.states],
        }
        if weights is not None:
            out["weights"] = [float(w) for w in weights]
        return out


@dataclass(frozen=True)
class EventRecord:
    t: float
    x: float
    incoming: tuple[FrontView, ...]
    outgoing: tuple[FrontView, ...]
    solver: str
    u_minus: State
    u_plus: State
    before: GlimmFunctionals
    after: GlimmFunctionals
    history_index: int = -1

    @property
    def dl(self) -> float:
        return self.after.l - self.before.l

    @property
    def dq(self) -> float:
        return self.after.q - self.before.q

    @property
    def d_potential(self) -> float:
        return self.after.potential - self.before.potential

    @property
    def np_strength(self) -> float:
        return self.after.np_total

    @property
    def physical_pair(self) -> bool:
        return all(f.physical for f in self.incoming)

    def csv_row(self) -> list:
        return [repr(self.t), repr(self.x),
                " ".join(str(f.id) for f in self.incoming),
                " ".join(str(f.id) for f in self.outgoing),
                self.solver, repr(self.dl), repr(self.dq), repr(self.np_strength)]


def write_event_log(path, events: Iterable[EventRecord]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_FIELDS)
        for ev in events:
            w.writerow(ev.csv_row())


# ---------------------------------------------------------------- shift policies


def dissipation_coefficients(system, u_left, u_right, u_minus, u_plus, a_left, a_right):
    """(A, B) with D(hdot) = A - hdot * B.

    u_left/u_right are the states of the front, u_minus/u_plus the traces of
    the other solution on either side of it, a_left/a_right the weights.
    """
    a = a_right * system.relative_entropy_flux(u_plus, u_right) - a_left * system.relative_entropy_flux(u_minus, u_left)
    b = a_right * system.relative_entropy(u_plus, u_right) - a_left * system.relative_entropy(u_minus, u_left)
    return float(a), float(b)


def dissipation(system, u_left, u_right, u_minus, u_plus, a_left, a_right, hdot) -> float:
    a, b = dissipation_coefficients(system, u_left, u_right, u_minus, u_plus, a_left, a_right)
    return a - hdot * b


@dataclass(frozen=True)
class ShiftChoice:
    speed: float
    dissipation: Optional[float]
    rh_speed: float


@dataclass(frozen=True)
class ShiftPolicy:
    mode: str = "rankine-hugoniot"
    offset: float = 0.0
    windows: Optional[SpeedWindows] = None

    MODES = ("rankine-hugoniot", "constant-offset", "dissipation-greedy")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ConfigError(f"unknown shift policy {self.mode!r}; expected one of {self.MODES}")

    @property
    def needs_traces(self) -> bool:
        return self.mode == "dissipation-greedy"

    def with_windows(self, windows: SpeedWindows) -> "ShiftPolicy":
        return replace(self, windows=windows)

    def _clamp(self, family, speed):
        return speed if self.windows is None else self.windows.clamp(family, speed)

    def birth_speed(self, system, front) -> float:
        """Speed at creation, before any trace information is available."""
        base = rh_speed(front.left, front.right)
        if self.mode == "constant-offset":
            base += self.offset
        return self._clamp(front.family, base)

    def shift_speed(self, system, front, traces=None, weights=(1.0, 1.0)) -> ShiftChoice:
        """Speed for a physical shock plus the dissipation it achieves against ``traces``."""
        if front.kind != SHOCK:
            raise ValueError("shift speeds are only defined for shock fronts")
        rh = rh_speed(front.left, front.right)
        if self.mode == "dissipation-greedy" and traces is None:
            raise ConfigError("the dissipation-greedy policy needs traces of the other solution")
        if traces is None:
            return ShiftChoice(self.birth_speed(system, front), None, rh)
        u_minus, u_plus = traces
        a_left, a_right = weights
        coef_a, coef_b = dissipation_coefficients(system, front.left, front.right, u_minus, u_plus, a_left, a_right)
        if self.mode != "dissipation-greedy":
            speed = self.birth_speed(system, front)
        else:
            lo, hi = self.windows.bounds(front.family) if self.windows else (-math.inf, math.inf)
            scale = max(abs(coef_a), 1e-300)
            if abs(coef_b) <= 1e-14 * scale or coef_b == 0.0:
                speed = self._clamp(front.family, rh)
            else:
                speed = hi if coef_b > 0 else lo
                if not math.isfinite(speed):
                    raise ConfigError("dissipation-greedy needs finite speed windows")
        return ShiftChoice(speed, coef_a - speed * coef_b, rh)


def shift_speed(policy: ShiftPolicy, system, front, wild_traces=None, weights=(1.0, 1.0)) -> ShiftChoice:
    return policy.shift_speed(system, front, wild_traces, weights)


@dataclass(frozen=True)
class ShiftRecord:
    t: float
    front_id: int
    family: int
    position: float
    choice: ShiftChoice
    u_left: State
    u_right: State
    u_minus: State
    u_plus: State
    a_left: float
    a_right: float


# ---------------------------------------------------------------- the solution


def _view(front: Front, t: float) -> FrontView:
    return FrontView(front.id, front.family, front.kind, front.strength, front.left, front.right,
                     front.position(t), front.speed)


@dataclass(eq=False)
class FrontSolution:
    system: IsentropicEuler
    params: EngineParams
    policy: ShiftPolicy
    windows: SpeedWindows
    left_state: State
    time: float = 0.0
    head: Optional[Front] = None
    event_log: list = field(default_factory=list)
    history: list = field(default_factory=list)
    shift_log: list = field(default_factory=list)

    def __post_init__(self):
        self._ids = itertools.count(1)
        self._seq = itertools.count()
        self._heap: list = []
        self._versions: dict[int, int] = {}
        self._traces: Optional[Callable] = None
        self._weights: Optional[Callable] = None
        self._times_cache: list[float] = []

    # ---- queries

    @property
    def fronts(self) -> list[Front]:
        out = []
        f = self.head
        while f is not None:
            out.append(f)
            f = f.next
        return out

    @property
    def states(self) -> list[State]:
        return [self.left_state] + [f.right for f in self.fronts]

    @property
    def lambda_hat(self) -> float:
        return self.windows.lambda_hat

    def glimm(self) -> GlimmFunctionals:
        return glimm_of(self.fronts, self.params.kappa)

    def snapshot(self, t: Optional[float] = None) -> Snapshot:
        t = self.time if t is None else t
        return Snapshot(t, self.left_state, tuple(_view(f, t) for f in self.fronts))

    def sample(self, t: float, x: float) -> State:
        return self.snapshot_at(t).sample(x, t)

    def snapshot_at(self, t: float) -> Snapshot:
        """The function at a past or current time, rebuilt from the history."""
        if t > self.time + 1e-15 or t < 0:
            raise ValueError(f"time {t} outside the simulated range [0, {self.time}]")
        if not self.history or t >= self.history[-1].time:
            return self.snapshot(t)
        k = bisect.bisect_right(self._history_times(), t) - 1
        return self.history[max(k, 0)].at_time(t)

    def _history_times(self) -> list[float]:
        if len(self._times_cache) != len(self.history):
            self._times_cache = [h.time for h in self.history]
        return self._times_cache

    def event_snapshots(self, event: EventRecord) -> tuple[Snapshot, Snapshot]:
        """Profiles just before and just after an event, incoming and outgoing fronts placed at its point."""
        k = event.history_index
        if k < 1:
            raise ValueError("event snapshots need record_history=True")
        ids_in = {f.id for f in event.incoming}
        pre = self.history[k - 1].at_time(event.t)
        pre = Snapshot(event.t, pre.left_state, tuple(f._replace(position=event.x) if f.id in ids_in else f
                                                      for f in pre.fronts))
        post = self.history[k]
        ids_out = {f.id for f in event.outgoing}
        post = Snapshot(event.t, post.left_state, tuple(f._replace(position=event.x) if f.id in ids_out else f
                                                        for f in post.fronts))
        return pre, post

    # ---- wiring for shift policies that need the other solution

    def attach_traces(self, traces: Callable[[float], tuple], weights: Optional[Callable] = None):
        """traces(x) -> (u_minus, u_plus); weights(snapshot) -> callable front -> (a_left, a_right)."""
        self._traces = traces
        self._weights = weights

    def refresh_shifts(self, traces: Optional[Callable] = None, weights: Optional[Callable] = None) -> list[ShiftRecord]:
        """Re-evaluate every shock speed at the current time and reschedule collisions."""
        traces = traces or self._traces
        weights = weights or self._weights
        t = self.time
        snap = self.snapshot()
        weight_at = weights(snap) if weights is not None else None
        records = []
        for f in self.fronts:
            if f.kind != SHOCK:
                continue
            x = f.position(t)
            tr = traces(x) if traces is not None else None
            aw = weight_at(f) if weight_at is not None else (1.0, 1.0)
            choice = self.policy.shift_speed(self.system, f, tr, aw)
            f.reanchor(t, self._perturb(f, choice.speed))
            if tr is not None:
                records.append(ShiftRecord(t, f.id, f.family, x, choice, f.left, f.right, tr[0], tr[1], aw[0], aw[1]))
        self.shift_log.extend(records)
        self._rebuild_queue()
        self._record_history()
        return records

    # ---- evolution

    def advance(self, t_target: float) -> "FrontSolution":
        if t_target < self.time:
            raise ValueError(f"cannot advance backwards from {self.time} to {t_target}")
        while self._heap and self._heap[0][0] <= t_target:
            t_hit, _, left, right, vl, vr = heapq.heappop(self._heap)
            if not (left.next is right and self._versions.get(left.id) == vl
                    and self._versions.get(right.id) == vr):
                continue
            if len(self.event_log) >= self.params.max_events:
                raise NumericalError(f"event budget of {self.params.max_events} exhausted at t={self.time:.6g} "
                                     f"with {len(self.fronts)} fronts")
            self._collide(max(t_hit, self.time), left, right)
        self.time = t_target
        return self

    def _perturb(self, front: Front, speed: float) -> float:
        if front.family == NP_FAMILY:
            return speed
        return speed + (front.id % _TIE_CYCLE) * self.params.tie_eps

    def _touch(self, front: Front):
        self._versions[front.id] = self._versions.get(front.id, -1) + 1

    def _schedule(self, left: Optional[Front]):
        if left is None or left.next is None:
            return
        right = left.next
        dv = left.speed - right.speed
        if dv <= 0:
            return
        gap = right.position(self.time) - left.position(self.time)
        t_hit = self.time + max(gap, 0.0) / dv
        heapq.heappush(self._heap, (t_hit, next(self._seq), left, right,
                                    self._versions[left.id], self._versions[right.id]))

    def _rebuild_queue(self):
        self._heap = []
        for f in self.fronts:
            self._touch(f)
        for f in self.fronts:
            self._schedule(f)

    def _record_history(self):
        if self.params.record_history:
            self.history.append(self.snapshot())

    def _link(self, prev: Optional[Front], new: list[Front], nxt: Optional[Front]):
        chain = [prev] + new + [nxt]
        for a, b in zip(chain, chain[1:]):
            if a is not None:
                a.next = b
            if b is not None:
                b.prev = a
        if prev is None:
            self.head = new[0] if new else nxt

    def _insert_fan(self, fan: FanResult, t: float, x: float, prev, nxt, u_minus, u_plus) -> list[Front]:
        fronts = [f for f in fan.fronts if not (f.family == NP_FAMILY and f.strength <= self.params.np_prune)]
        if len(fronts) < len(fan.fronts):
            if fronts:
                last = fronts[-1]
                last.right = u_plus
                if last.kind == SHOCK:
                    last.speed = self.policy.birth_speed(self.system, last)
            elif nxt is not None:
                nxt.left = u_minus
        for f in fronts:
            f.t0, f.x0 = t, x
            f.speed = self._perturb(f, f.speed)
            self._touch(f)
        for a, b in zip(fronts, fronts[1:]):
            if b.speed < a.speed:
                raise InternalError(f"fan speeds out of order at t={t}: {a.speed} > {b.speed}")
        self._link(prev, fronts, nxt)
        return fronts

    def _check_triple(self, t, x, left, right):
        tol = 1e-12 * (1.0 + abs(x))
        p = left.prev
        if p is not None and p.speed > left.speed and abs(p.position(t) - x) <= tol:
            raise InternalError(f"simultaneous triple collision at t={t}, x={x}")
        n = right.next
        if n is not None and n.speed < right.speed and abs(n.position(t) - x) <= tol:
            raise InternalError(f"simultaneous triple collision at t={t}, x={x}")

    def _collide(self, t: float, left: Front, right: Front):
        x = 0.5 * (left.position(t) + right.position(t))
        self._check_triple(t, x, left, right)
        self.time = t
        before = self.glimm()
        incoming = (_view(left, t), _view(right, t))
        u_minus, u_plus = left.left, right.right
        p = self.params
        both_physical = left.physical and right.physical
        if both_physical and abs(left.strength * right.strength) > p.eps_nu:
            fan = accurate_solve(self.system, u_minus, u_plus, p.delta_nu, (t, x), self.policy,
                                 self._ids, p.radius)
            solver = "accurate"
        else:
            fan = simplified_solve(self.system, [left, right], u_minus, u_plus, p.delta_nu, (t, x),
                                   self.lambda_hat, self.policy, self._ids)
            solver = "simplified"
        prev, nxt = left.prev, right.next
        for f in (left, right):
            self._versions.pop(f.id, None)
            f.prev = f.next = None
        new = self._insert_fan(fan, t, x, prev, nxt, u_minus, u_plus)
        after = self.glimm()
        self.event_log.append(EventRecord(t, x, incoming, tuple(_view(f, t) for f in new), solver,
                                          u_minus, u_plus, before, after,
                                          len(self.history) if p.record_history else -1))
        if self._traces is not None and self.policy.needs_traces:
            self.refresh_shifts()
            return
        self._schedule(prev)
        for f in new:
            self._schedule(f)
        self._record_history()


# ---------------------------------------------------------------- public operations


def init(u0: PiecewiseConstant, params: EngineParams | None = None, system: IsentropicEuler | None = None,
         policy: ShiftPolicy | None = None, window_margin: float | None = None) -> FrontSolution:
    """Replace every initial jump by its accurate fan."""
    system = system or IsentropicEuler()
    params = params or EngineParams()
    for u in u0.states:
        if not system.box.contains(u, tol=1e-12):
            raise ConfigError(f"initial state {tuple(u)} lies outside the state box")
    tv = u0.total_variation()
    if tv > params.tv_cap:
        raise ConfigError(f"initial total variation {tv:.4g} exceeds the cap {params.tv_cap}")
    margin = window_margin if window_margin is not None else 2.0 * params.tv_cap
    windows = speed_windows(system, u0.states, margin)
    policy = (policy or ShiftPolicy()).with_windows(windows)
    sol = FrontSolution(system, params, policy, windows, u0.states[0])
    fronts: list[Front] = []
    for x, a, b in zip(u0.breakpoints, u0.states, u0.states[1:]):
        if a == b:
            continue
        fan = accurate_solve(system, a, b, params.delta_nu, (0.0, x), policy, sol._ids, params.radius)
        for f in fan.fronts:
            f.speed = sol._perturb(f, f.speed)
        fronts.extend(fan.fronts)
    for f in fronts:
        sol._touch(f)
    sol._link(None, fronts, None)
    for f in fronts:
        sol._schedule(f)
    sol._record_history()
    return sol


def advance(sol: FrontSolution, t_target: float) -> FrontSolution:
    return sol.advance(t_target)


def glimm(sol: FrontSolution) -> GlimmFunctionals:
    return sol.glimm()


def sample(sol: FrontSolution, t: float, x: float) -> State:
    return sol.sample(t, x)


def snapshot(sol: FrontSolution, t: Optional[float] = None) -> Snapshot:
    return sol.snapshot_at(sol.time if t is None else t)


# ---------------------------------------------------------------- initial data generators


def single_wave_data(system: IsentropicEuler, base: State, family: int, sigma: float,
                     x: float = 0.0) -> PiecewiseConstant:
    """One jump at x whose right state lies on the forward wave curve of ``base``."""
    s1, s2 = (sigma, 0.0) if family == 1 else (0.0, sigma)
    return PiecewiseConstant((x,), (base, compose(system, base, s1, s2)))


def random_bv(system: IsentropicEuler, n_jumps: int, tv: float, rng: np.random.Generator,
              base: State | None = None, span: tuple[float, float] = (0.0, 1.0)) -> PiecewiseConstant:
    """Random piecewise-constant data whose wave strengths sum to ``tv`` (so its TV is at most ``tv``)."""
    if n_jumps < 1:
        raise ConfigError("random data needs at least one jump")
    base = base or State(1.0, 0.0)
    raw = rng.uniform(0.2, 1.0, size=(n_jumps, 2)) * rng.choice([-1.0, 1.0], size=(n_jumps, 2))
    raw *= tv / np.abs(raw).sum()
    xs = np.sort(rng.uniform(*span, size=n_jumps))
    states = [base]
    for s1, s2 in raw:
        states.append(compose(system, states[-1], float(s1), float(s2)))
    return PiecewiseConstant(tuple(xs), tuple(states))
