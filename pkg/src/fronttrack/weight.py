"""Signed shock measure and the piecewise-constant weight a(t, x) built from it."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import FrontSolution, GlimmFunctionals, Snapshot
from .errors import ConfigError
from .frontsolvers import SHOCK


@dataclass(frozen=True)
class SignedAtoms:
    """Point masses: -strength at each 1-shock, +strength at each 2-shock."""

    positions: np.ndarray
    masses: np.ndarray
    ids: tuple[int, ...] = ()

    def __len__(self):
        return len(self.positions)

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(float(x), float(m)) for x, m in zip(self.positions, self.masses)]

    def total_mass(self) -> float:
        return float(self.masses.sum())


def _as_snapshot(sol) -> Snapshot:
    return sol.snapshot() if isinstance(sol, FrontSolution) else sol


def build_mu(sol) -> SignedAtoms:
    snap = _as_snapshot(sol)
    pos, mass, ids = [], [], []
    for f in snap.fronts:
        if f.kind == SHOCK and f.family in (1, 2):
            pos.append(f.position)
            mass.append(-f.strength if f.family == 1 else f.strength)
            ids.append(f.id)
    return SignedAtoms(np.array(pos, dtype=float), np.array(mass, dtype=float), tuple(ids))


@dataclass(frozen=True)
class WeightProfile:
    """a(x) = base + C * (mass of atoms at positions <= x)."""

    base: float
    c: float
    atoms: SignedAtoms
    time: float = 0.0
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "values", self.base + self.c * np.concatenate(([0.0], np.cumsum(self.atoms.masses))))

    @property
    def breakpoints(self) -> np.ndarray:
        return self.atoms.positions

    def at(self, x):
        """Right-continuous evaluation; accepts scalars or arrays."""
        idx = np.searchsorted(self.atoms.positions, x, side="right")
        return self.values[idx]

    def around(self, x: float) -> tuple[float, float]:
        """(a(x-), a(x+)); every atom located exactly at x counts as crossed."""
        lo = np.searchsorted(self.atoms.positions, x, side="left")
        hi = np.searchsorted(self.atoms.positions, x, side="right")
        return float(self.values[lo]), float(self.values[hi])

    def across(self, front_id: int) -> tuple[float, float]:
        """(a(x-), a(x+)) at the atom of one shock, in front order even when atoms share a position."""
        k = self.atoms.ids.index(front_id)
        return float(self.values[k]), float(self.values[k + 1])

    def pair(self, front) -> tuple[float, float]:
        """(a(x-), a(x+)) seen by one front: its own atom for shocks, the flat value otherwise."""
        if front.id in self.atoms.ids:
            return self.across(front.id)
        a = float(self.at(front.position(self.time) if callable(front.position) else front.position))
        return a, a

    def deviation(self) -> float:
        """sup_x |a(x) - 1|."""
        return float(np.max(np.abs(self.values - 1.0)))

    def to_json(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "weights": self.values.tolist()}


def build_weight(sol, glimm: Optional[GlimmFunctionals] = None, c: float = 1.0,
                 kappa: Optional[float] = None, check: bool = True) -> WeightProfile:
    """Weight profile of a solution or snapshot; checks C(L + kappa Q + L) <= 1/2."""
    snap = _as_snapshot(sol)
    if glimm is None:
        if kappa is None:
            kappa = sol.params.kappa if isinstance(sol, FrontSolution) else 10.0
        glimm = snap.glimm(kappa)
    if check and c * (glimm.potential + glimm.l) > 0.5:
        raise ConfigError(f"weight constant too large: C={c}, L={glimm.l:.4g}, Q={glimm.q:.4g}, "
                          f"kappa={glimm.kappa}; need C(L + kappa Q + L) <= 1/2")
    return WeightProfile(1.0 + c * glimm.potential, c, build_mu(snap), snap.time)


def weight_bound_constant(c: float, kappa: float, eps: float) -> float:
    """C0 with |a - 1| <= C0 eps whenever L + kappa Q <= eps (1 + kappa eps) and |mu| <= L."""
    return 2.0 * c * (1.0 + kappa * eps)


def ratio_window(family: int, strength: float, c: float) -> tuple[float, float]:
    s = abs(strength)
    if family == 1:
        return 1.0 - 2.0 * c * s, 1.0 - 0.5 * c * s
    if family == 2:
        return 1.0 + 0.5 * c * s, 1.0 + 2.0 * c * s
    raise ValueError(f"no ratio window for family {family}")


@dataclass(frozen=True)
class JumpCheck:
    front_id: int
    family: int
    strength: float
    ratio: float
    lower: float
    upper: float

    @property
    def margin(self) -> float:
        """Distance to the nearest window edge; negative when violated."""
        return min(self.ratio - self.lower, self.upper - self.ratio)

    @property
    def ok(self) -> bool:
        return self.margin >= -1e-12


@dataclass(frozen=True)
class JumpReport:
    checks: tuple[JumpCheck, ...]
    constant_elsewhere: bool

    @property
    def violations(self) -> tuple[JumpCheck, ...]:
        return tuple(c for c in self.checks if not c.ok)

    @property
    def ok(self) -> bool:
        return self.constant_elsewhere and not self.violations

    @property
    def worst_margin(self) -> float:
        return min((c.margin for c in self.checks), default=float("inf"))


def check_weight_jumps(profile: WeightProfile, sol) -> JumpReport:
    """Ratio a(x+)/a(x-) across every shock against its window; a must not jump elsewhere."""
    snap = _as_snapshot(sol)
    checks = []
    shock_pos = set()
    for f in snap.fronts:
        if f.kind != SHOCK or f.family not in (1, 2):
            continue
        shock_pos.add(f.position)
        a_minus, a_plus = profile.across(f.id)
        lo, hi = ratio_window(f.family, f.strength, profile.c)
        checks.append(JumpCheck(f.id, f.family, f.strength, a_plus / a_minus, lo, hi))
    flat = all(np.ptp(profile.around(f.position)) == 0.0 for f in snap.fronts
               if f.kind != SHOCK and f.position not in shock_pos)
    return JumpReport(tuple(checks), flat)


def max_increase(before: WeightProfile, after: WeightProfile, tol: float = 1e-9) -> float:
    """sup_x (after(x) - before(x)) over the open intervals between breakpoints.

    Breakpoints closer than ``tol`` are merged so that the same front seen at
    two round-off-different positions does not create a spurious sliver.
    """
    pts = np.sort(np.concatenate((before.breakpoints, after.breakpoints)))
    if len(pts):
        keep = np.concatenate(([True], np.diff(pts) > tol * (1.0 + np.abs(pts[1:]))))
        pts = pts[keep]
        probe = np.concatenate(([pts[0] - 1.0], 0.5 * (pts[1:] + pts[:-1]), [pts[-1] + 1.0]))
    else:
        probe = np.array([0.0])
    return float(np.max(after.at(probe) - before.at(probe)))


@dataclass(frozen=True)
class EventWeightCheck:
    t: float
    x: float
    increase: float
    mass_change: float
    potential_drop: float
    solver: str


def check_events(sol: FrontSolution, c: float = 1.0) -> list[EventWeightCheck]:
    """Compare the weight just before and just after every logged event."""
    out = []
    kappa = sol.params.kappa
    for ev in sol.event_log:
        pre, post = sol.event_snapshots(ev)
        a_pre = build_weight(pre, pre.glimm(kappa), c, check=False)
        a_post = build_weight(post, post.glimm(kappa), c, check=False)
        out.append(EventWeightCheck(ev.t, ev.x, max_increase(a_pre, a_post),
                                    abs(build_mu(post).total_mass() - build_mu(pre).total_mass()),
                                    -ev.d_potential, ev.solver))
    return out
