"""Weighted relative-entropy bookkeeping, dissipation checks, interaction estimates and curve geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .engine import (EngineParams, FrontSolution, PiecewiseConstant, ShiftPolicy, Snapshot,
                     dissipation_coefficients, init, single_wave_data)
from .errors import ConfigError, RangeError
from .frontsolvers import NONPHYSICAL, RAREFACTION, SHOCK
from .system import IsentropicEuler, State, StateBox, SystemParams, distance
from .wavecurves import forward_wave_curve, solve_riemann
from .weight import WeightProfile, build_weight, check_weight_jumps, ratio_window
from .wild import GridSolution, bump_perturbation, godunov_step, project, traces_at


# ---------------------------------------------------------------- geometry


@dataclass(frozen=True)
class Cone:
    """Window [-r + v t, r - v t]."""

    r: float
    v: float

    def __post_init__(self):
        if not (self.r > 0 and self.v > 0):
            raise ConfigError(f"cone needs r > 0 and v > 0, got r={self.r}, v={self.v}")

    @property
    def t_max(self) -> float:
        return self.r / self.v

    def window(self, t: float) -> tuple[float, float]:
        return -self.r + self.v * t, self.r - self.v * t


def default_cone(system: IsentropicEuler, r: float) -> Cone:
    c = system.certified
    return Cone(r, max(c.lambda_hat, c.q_over_eta) + 1.0)


@dataclass(frozen=True)
class SpaceLikeCurve:
    """Polyline t = gamma(x) through (xs[k], ts[k]) with every slope strictly below 1/lambda_hat."""

    xs: tuple[float, ...]
    ts: tuple[float, ...]
    lambda_hat: float

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ts = tuple(float(t) for t in self.ts)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ts", ts)
        if len(xs) < 2 or len(xs) != len(ts):
            raise ConfigError("a curve needs at least two vertices and matching coordinates")
        dx = np.diff(xs)
        if np.any(dx <= 0):
            raise ConfigError("curve abscissae must be strictly increasing")
        if np.any(np.abs(np.diff(ts)) >= dx / self.lambda_hat):
            raise ConfigError("curve is not space-like: some slope reaches 1/lambda_hat")

    @property
    def a(self) -> float:
        return self.xs[0]

    @property
    def b(self) -> float:
        return self.xs[-1]

    def __call__(self, x):
        return np.interp(x, self.xs, self.ts)

    @classmethod
    def horizontal(cls, t: float, a: float, b: float, lambda_hat: float) -> "SpaceLikeCurve":
        return cls((a, b), (t, t), lambda_hat)


def dominates(gamma: SpaceLikeCurve, gamma_p: SpaceLikeCurve, tol: float = 1e-12) -> bool:
    """gamma <= gamma' <= min(gamma(a) + (x-a)/lh, gamma(b) + (b-x)/lh) on the domain of gamma'."""
    if not (gamma.a <= gamma_p.a < gamma_p.b <= gamma.b):
        return False
    lh = gamma.lambda_hat
    xs = np.union1d(np.array(gamma_p.xs), [x for x in gamma.xs if gamma_p.a < x < gamma_p.b])
    g, gp = gamma(xs), gamma_p(xs)
    cap = np.minimum(gamma.ts[0] + (xs - gamma.a) / lh, gamma.ts[-1] + (gamma.b - xs) / lh)
    return bool(np.all(g <= gp + tol) and np.all(gp <= cap + tol))


def random_spacelike(rng: np.random.Generator, a: float, b: float, t0: float, lambda_hat: float,
                     n: int = 6, slope: float = 0.9) -> SpaceLikeCurve:
    xs = np.sort(np.concatenate(([a, b], rng.uniform(a, b, n - 2))))
    slopes = rng.uniform(-slope, slope, n - 1) / lambda_hat
    ts = t0 + np.concatenate(([0.0], np.cumsum(slopes * np.diff(xs))))
    return SpaceLikeCurve(tuple(xs), tuple(ts), lambda_hat)


def random_dominated_pair(rng: np.random.Generator, a: float, b: float, t_range: tuple[float, float],
                          lambda_hat: float) -> tuple[SpaceLikeCurve, SpaceLikeCurve]:
    """gamma and a curve gamma' it dominates, both inside the time range."""
    lo, hi = t_range
    span = (b - a) * 0.9 / lambda_hat
    if hi - lo <= span:
        raise ConfigError("time range too short for curves over this interval")
    t0 = rng.uniform(lo + span, hi - 2 * span) if hi - lo > 3 * span else lo + span
    gamma = random_spacelike(rng, a, b, t0, lambda_hat)
    ap, bp = np.sort(rng.uniform(a, b, 2))
    theta = rng.uniform(0.0, 0.9)
    kink = 0.5 * (gamma.ts[-1] - gamma.ts[0] + (a + b) / lambda_hat) * lambda_hat
    xs = np.union1d([ap, bp], [x for x in list(gamma.xs) + [kink] if ap < x < bp])
    cap = np.minimum(gamma.ts[0] + (xs - a) / lambda_hat, gamma.ts[-1] + (b - xs) / lambda_hat)
    ts = (1.0 - theta) * gamma(xs) + theta * cap
    return gamma, SpaceLikeCurve(tuple(xs), tuple(ts), lambda_hat)


def tv_along_curve(sol: FrontSolution, curve: SpaceLikeCurve, tol: float = 1e-12) -> float:
    """Total variation of x -> psi(gamma(x), x), enumerating front crossings in closed form."""
    t_lo, t_hi = min(curve.ts), max(curve.ts)
    if t_lo < 0 or t_hi > sol.time + 1e-12:
        raise RangeError(f"curve times [{t_lo}, {t_hi}] leave the simulated range [0, {sol.time}]")
    hist = sol.history
    if not hist:
        raise ValueError("tv_along_curve needs a solution run with record_history=True")
    ends = [h.time for h in hist[1:]] + [math.inf]
    crossings = []
    seg_x = np.array(curve.xs)
    seg_t = np.array(curve.ts)
    beta = np.diff(seg_t) / np.diff(seg_x)
    for h, t_end in zip(hist, ends):
        if t_end < t_lo or h.time > t_hi or not h.fronts:
            continue
        x_k = np.array([f.position for f in h.fronts])
        s_k = np.array([f.speed for f in h.fronts])
        for m in range(len(beta)):
            # front x = x_k + s (t - h.time) meets t = T_m + beta (x - X_m)
            t = (seg_t[m] + beta[m] * (x_k - s_k * h.time - seg_x[m])) / (1.0 - beta[m] * s_k)
            x = x_k + s_k * (t - h.time)
            ok = (t >= h.time) & (t < t_end) & (x >= seg_x[m]) & (x < seg_x[m + 1])
            if m == len(beta) - 1:
                ok |= (t >= h.time) & (t < t_end) & (x == seg_x[m + 1])
            for i in np.nonzero(ok)[0]:
                crossings.append((float(x[i]), h.fronts[i]))
    crossings.sort(key=lambda c: c[0])
    state = sol.snapshot_at(float(curve.ts[0])).sample(curve.a)
    tv = 0.0
    i = 0
    while i < len(crossings):
        j = i
        while j + 1 < len(crossings) and crossings[j + 1][0] - crossings[i][0] <= tol * (1 + abs(crossings[i][0])):
            j += 1
        new = crossings[j][1].right
        tv += distance(state, new)
        state = new
        i = j + 1
    return tv


def condition_h(sol: FrontSolution, n_pairs: int, rng: np.random.Generator,
                x_range: tuple[float, float]) -> dict:
    """Largest TV(gamma')/TV(gamma) over random dominated pairs of space-like curves."""
    ratios = []
    for _ in range(n_pairs):
        g, gp = random_dominated_pair(rng, *x_range, (0.0, sol.time), sol.lambda_hat)
        tv_g, tv_gp = tv_along_curve(sol, g), tv_along_curve(sol, gp)
        if tv_g > 1e-14:
            ratios.append(tv_gp / tv_g)
        elif tv_gp > 1e-12:
            ratios.append(math.inf)
    return {"C": max(ratios, default=0.0), "pairs": n_pairs, "ratios": ratios}


def l1_distance(a: Snapshot, b: Snapshot) -> float:
    """Exact L1 distance (Euclidean norm of the state difference) between two piecewise-constant functions."""
    pa, pb = a.breakpoints, b.breakpoints
    pts = np.union1d(pa, pb)
    if len(pts) < 2:
        return 0.0 if len(pts) == 0 else 0.0
    mids = 0.5 * (pts[1:] + pts[:-1])
    sa, sb = a.states, b.states
    ia = np.searchsorted(pa, mids, side="right")
    ib = np.searchsorted(pb, mids, side="right")
    diff = np.array([distance(sa[i], sb[j]) for i, j in zip(ia, ib)])
    return float((diff * np.diff(pts)).sum())


def lipschitz_in_time(sol: FrontSolution, rng: np.random.Generator, n_pairs: int = 50) -> dict:
    """Measured ||psi(t) - psi(s)||_1 / |t - s| against (sup L) * lambda_hat."""
    sup_l = max(h.glimm(sol.params.kappa).l for h in sol.history)
    worst = 0.0
    for _ in range(n_pairs):
        s, t = np.sort(rng.uniform(0.0, sol.time, 2))
        if t - s < 1e-9:
            continue
        worst = max(worst, l1_distance(sol.snapshot_at(s), sol.snapshot_at(t)) / (t - s))
    return {"ratio": worst, "bound": sup_l * sol.lambda_hat, "sup_L": sup_l}


# ---------------------------------------------------------------- entropy integrals and dissipation


def weighted_entropy_integral(system: IsentropicEuler, grid: GridSolution, psi: Snapshot,
                              profile: Optional[WeightProfile], cone: Cone, t: float) -> float:
    """Integral over the cone window of a(x) eta(u(x) | psi(t, x)), exact for piecewise constants."""
    if t >= cone.t_max:
        raise ValueError(f"t={t} is past the cone apex {cone.t_max}")
    lo, hi = cone.window(t)
    if lo < grid.x0 or hi > grid.x0 + grid.n * grid.dx:
        raise RangeError("cone window is not covered by the grid")
    psi_x = psi.positions_at(t)
    extra = [psi_x]
    if profile is not None:
        extra.append(profile.breakpoints)
    edges = grid.edges
    pts = np.concatenate([[lo, hi], edges] + extra)
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    mids = 0.5 * (pts[1:] + pts[:-1])
    cell = np.clip(np.floor((mids - grid.x0) / grid.dx).astype(int), 0, grid.n - 1)
    states = psi.states
    k = np.searchsorted(psi_x, mids, side="right")
    b = State(np.array([states[i].rho for i in k]), np.array([states[i].mom for i in k]))
    u = State(grid.rho[cell], grid.mom[cell])
    eta = system.relative_entropy(u, b)
    a = profile.at(mids) if profile is not None else 1.0
    return float(np.sum(a * eta * np.diff(pts)))


@dataclass(frozen=True)
class DissipationRecord:
    front_id: int
    t: float
    hdot: float
    a_left: float
    a_right: float
    u_minus: State
    u_plus: State
    d: float
    admissible: bool


def front_dissipation(system: IsentropicEuler, front, traces: tuple[State, State],
                      weights: tuple[float, float], hdot: float, c: float = 1.0, t: float = 0.0) -> DissipationRecord:
    """Dissipation functional of one shock against the other solution's traces."""
    u_minus, u_plus = traces
    a_left, a_right = weights
    coef_a, coef_b = dissipation_coefficients(system, front.left, front.right, u_minus, u_plus, a_left, a_right)
    lo, hi = ratio_window(front.family, front.strength, c)
    ratio = a_right / a_left
    admissible = lo - 1e-12 <= ratio <= hi + 1e-12
    return DissipationRecord(front.id, t, hdot, a_left, a_right, u_minus, u_plus, coef_a - hdot * coef_b, admissible)


def rarefaction_bracket(system: IsentropicEuler, u_left: State, u_right: State, v: float,
                        u_minus: State, u_plus: State) -> float:
    return float(system.relative_entropy_flux(u_plus, u_right) - system.relative_entropy_flux(u_minus, u_left)
                 - v * (system.relative_entropy(u_plus, u_right) - system.relative_entropy(u_minus, u_left)))


def rarefaction_dissipation(system: IsentropicEuler, u_left: State, u_right: State, v: float,
                            times: Sequence[float], u_minus: Sequence[State], u_plus: Sequence[State]) -> float:
    """Trapezoid time integral of the rarefaction bracket along x = v t."""
    if distance(u_left, u_right) == 0.0:
        return 0.0
    vals = [rarefaction_bracket(system, u_left, u_right, v, a, b) for a, b in zip(u_minus, u_plus)]
    return float(trapezoid(vals, times)) if len(vals) > 1 else 0.0


def rarefaction_bound_constant(integral: float, delta: float, u_left: State, u_right: State, t: float) -> float:
    """Fitted C in  integral <= C delta |u_L - u_R| t."""
    return integral / (delta * distance(u_left, u_right) * t)


# ---------------------------------------------------------------- interaction estimates


@dataclass(frozen=True)
class InteractionMargins:
    case: str
    lhs: float
    scale: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.scale if self.scale > 0 else 0.0


def _riemann_strength(system, a, b, family):
    w_a, w_b = system.riemann_invariants(a), system.riemann_invariants(b)
    return float(w_a[family - 1] - w_b[family - 1])


def interaction_margins(system: IsentropicEuler, u_minus: State, left: tuple[int, float],
                        right: tuple[int, float], metric: str = "arclength") -> InteractionMargins:
    """Left side of the pairwise interaction estimate for incoming (family, strength) pairs."""
    (fa, sa), (fb, sb) = left, right
    u_mid = forward_wave_curve(system, u_minus, fa, sa)
    u_plus = forward_wave_curve(system, u_mid, fb, sb)
    out = solve_riemann(system, u_minus, u_plus, radius=2.0)
    s1, s2 = out.sigma1, out.sigma2
    if metric == "riemann":
        sa = _riemann_strength(system, u_minus, u_mid, fa)
        sb = _riemann_strength(system, u_mid, u_plus, fb)
        s1 = _riemann_strength(system, u_minus, out.middle, 1)
        s2 = _riemann_strength(system, out.middle, u_plus, 2)
    elif metric != "arclength":
        raise ValueError(f"unknown strength metric {metric!r}")
    if (fa, fb) == (1, 1):
        case, lhs = "overtaking-1", abs(s1 - (sa + sb)) + abs(s2)
    elif (fa, fb) == (2, 2):
        case, lhs = "overtaking-2", abs(s1) + abs(s2 - (sa + sb))
    elif (fa, fb) == (2, 1):
        case, lhs = "head-on", abs(s1 - sb) + abs(s2 - sa)
    else:
        case, lhs = "separating", abs(s1 - sa) + abs(s2 - sb)
    return InteractionMargins(case, lhs, abs(sa * sb) * (abs(sa) + abs(sb)))


def interaction_check(system: IsentropicEuler, event) -> InteractionMargins:
    """Margins of a logged event between two physical fronts."""
    fa, fb = event.incoming
    return interaction_margins(system, event.u_minus, (fa.family, fa.strength), (fb.family, fb.strength))


def interaction_sweep(system: IsentropicEuler, bases: Sequence[State], case: str,
                      s0: float = 0.08, halvings: int = 3, metric: str = "arclength") -> dict:
    """Strength-halving sweep over all approaching sign patterns; returns the worst slope and the largest C0."""
    fams = {"head-on": (2, 1), "overtaking-1": (1, 1), "overtaking-2": (2, 2)}[case]
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    if fams[0] == fams[1]:
        signs = [p for p in signs if p != (-1, -1)]
    strengths = s0 / 2.0 ** np.arange(halvings)
    slopes, c0 = [], 0.0
    for u in bases:
        for sg in signs:
            lhs = []
            for s in strengths:
                m = interaction_margins(system, u, (fams[0], sg[0] * s), (fams[1], sg[1] * s), metric)
                lhs.append(m.lhs)
                c0 = max(c0, m.ratio)
            lhs = np.maximum(np.array(lhs), 1e-300)
            slopes.append(float(np.polyfit(np.log(strengths), np.log(lhs), 1)[0]))
    return {"case": case, "metric": metric, "min_slope": min(slopes), "slopes": slopes, "c0": c0}


def estimate_interaction_constant(system: IsentropicEuler, n: int = 1000, scale: float = 0.05,
                                  seed: int = 0) -> float:
    """Largest ratio lhs / (|s's''|(|s'|+|s''|)) over random small approaching interactions."""
    rng = np.random.default_rng(seed)
    bases = system.box.sample(rng, n)
    worst = 0.0
    pairs = [(2, 1), (1, 1), (2, 2)]
    for k in range(n):
        fa, fb = pairs[k % 3]
        sa, sb = rng.uniform(-scale, scale, 2)
        if fa == fb and sa < 0 and sb < 0:
            sa = -sa
        u = State(float(bases.rho[k]), float(bases.mom[k]))
        try:
            worst = max(worst, interaction_margins(system, u, (fa, sa), (fb, sb)).ratio)
        except Exception:
            continue
    return worst


# ---------------------------------------------------------------- the stability experiment


@dataclass(frozen=True)
class StabilityConfig:
    gamma: float = 2.0
    box: StateBox = StateBox(0.5, 2.0, 1.0)
    base: State = State(1.0, 0.0)
    family: int = 1
    strength: float = 0.1
    shock_at: float = 0.0
    delta_nu: float = 0.02
    eps_nu: float = 1e-4
    kappa: float = 10.0
    weight_c: float = 1.0
    policy: str = "dissipation-greedy"
    offset: float = 0.0
    dx: float = 1.0 / 200
    cfl: float = 0.5
    r: float = 1.0
    v: Optional[float] = None
    t_end: Optional[float] = None
    bump_center: float = 0.1
    bump_width: float = 0.05
    bump_l2: float = 1e-2
    bump_direction: tuple[float, float] = (1.0, 0.0)
    trace_cells: int = 2
    trace_skip: int = 0
    factor: float = 4.0
    d_tol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.cfl <= 0.5:
            raise ConfigError(f"cfl must lie in (0, 1/2], got {self.cfl}")
        if not self.dx > 0:
            raise ConfigError(f"dx must be > 0, got {self.dx}")


@dataclass
class StabilityReport:
    config: StabilityConfig
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    budget: list = field(default_factory=list)
    l: list = field(default_factory=list)
    q: list = field(default_factory=list)
    np_total: list = field(default_factory=list)
    budget_parts: dict = field(default_factory=lambda: {SHOCK: 0.0, RAREFACTION: 0.0, NONPHYSICAL: 0.0})
    shock_records: int = 0
    positive_records: int = 0
    weight_violations: int = 0
    monotonicity_violations: int = 0
    max_entropy_production: float = 0.0
    t_end: float = 0.0
    cone: Optional[Cone] = None

    @property
    def e0(self) -> float:
        return self.energy[0] if self.energy else 0.0

    @property
    def positive_fraction(self) -> float:
        return self.positive_records / self.shock_records if self.shock_records else 0.0

    @property
    def holds(self) -> bool:
        f = self.config.factor
        return all(e <= f * self.e0 + b + 1e-14 for e, b in zip(self.energy, self.budget))

    @property
    def worst_margin(self) -> float:
        f = self.config.factor
        return min((f * self.e0 + b - e for e, b in zip(self.energy, self.budget)), default=0.0)

    @property
    def hard_ok(self) -> bool:
        return self.weight_violations == 0 and self.monotonicity_violations == 0

    def rows(self):
        for t, e, l, q, n, b in zip(self.times, self.energy, self.l, self.q, self.np_total, self.budget):
            yield t, e, l, q, l + self.config.kappa * q, n, b

    def summary(self) -> dict:
        return {
            "dx": self.config.dx,
            "policy": self.config.policy,
            "t_end": self.t_end,
            "cone": asdict(self.cone) if self.cone else None,
            "E0": self.e0,
            "E_final": self.energy[-1] if self.energy else None,
            "budget_final": self.budget[-1] if self.budget else None,
            "budget_parts": dict(self.budget_parts),
            "factor": self.config.factor,
            "holds": self.holds,
            "worst_margin": self.worst_margin,
            "positive_fraction": self.positive_fraction,
            "shock_records": self.shock_records,
            "weight_violations": self.weight_violations,
            "monotonicity_violations": self.monotonicity_violations,
            "max_entropy_production": self.max_entropy_production,
        }


def _front_terms(system, snap: Snapshot, grid: GridSolution, profile: WeightProfile, window, k, skip):
    """(kind, F+ - F-) for every front strictly inside the window."""
    lo, hi = window
    out = []
    for f in snap.fronts:
        if not lo < f.position < hi:
            continue
        u_minus, u_plus = traces_at(grid, f.position, k, skip)
        a_left, a_right = profile.pair(f)
        coef_a, coef_b = dissipation_coefficients(system, f.left, f.right, u_minus, u_plus, a_left, a_right)
        out.append((f, coef_a - f.speed * coef_b))
    return out


def stability_experiment(cfg: StabilityConfig, psi0: Optional[PiecewiseConstant] = None) -> StabilityReport:
    """Godunov run from perturbed data against front tracking from the unperturbed data."""
    system = IsentropicEuler(SystemParams(gamma=cfg.gamma, state_box=cfg.box))
    if psi0 is None:
        psi0 = (PiecewiseConstant.constant(cfg.base) if cfg.strength == 0
                else single_wave_data(system, cfg.base, cfg.family, cfg.strength, cfg.shock_at))
    params = EngineParams(delta_nu=cfg.delta_nu, eps_nu=cfg.eps_nu, kappa=cfg.kappa)
    sol = init(psi0, params, system, ShiftPolicy(cfg.policy, cfg.offset))
    lam_hat = sol.lambda_hat
    cert = system.certified
    cone = Cone(cfg.r, cfg.v if cfg.v is not None else max(lam_hat, cert.q_over_eta) + 1.0)
    t_end = cfg.t_end if cfg.t_end is not None else cfg.r / (2.0 * cone.v)
    if t_end >= cone.t_max:
        raise ConfigError("t_end must stay below the cone apex r / v")

    # cells centred on multiples of dx so that a jump at 0 sits mid-cell
    pad = (cfg.trace_cells + cfg.trace_skip + 4) * cfg.dx
    m = int(math.ceil((cfg.r + pad) / cfg.dx))
    x0 = -(m + 0.5) * cfg.dx
    grid = project(psi0, x0, cfg.dx, 2 * m + 1)
    if cfg.bump_l2 > 0:
        grid = bump_perturbation(grid, cfg.bump_center, cfg.bump_width, cfg.bump_l2, cfg.bump_direction)

    def weights(snap):
        return build_weight(snap, snap.glimm(cfg.kappa), cfg.weight_c)

    current = {"grid": grid}

    def traces(x):
        return traces_at(current["grid"], x, cfg.trace_cells, cfg.trace_skip)

    report = StabilityReport(cfg, t_end=t_end, cone=cone)
    if sol.policy.needs_traces:
        sol.attach_traces(traces, lambda snap: weights(snap).pair)
        sol.refresh_shifts()

    budget = 0.0
    prev_rate = None
    prev_time = 0.0

    def observe(t):
        nonlocal budget, prev_rate, prev_time
        snap = sol.snapshot()
        profile = weights(snap)
        jumps = check_weight_jumps(profile, snap)
        report.weight_violations += len(jumps.violations) + (0 if jumps.constant_elsewhere else 1)
        rate = {SHOCK: 0.0, RAREFACTION: 0.0, NONPHYSICAL: 0.0}
        for f, val in _front_terms(system, snap, current["grid"], profile, cone.window(t),
                                   cfg.trace_cells, cfg.trace_skip):
            rate[f.kind] += max(val, 0.0)
            if f.kind == SHOCK:
                report.shock_records += 1
                report.positive_records += val > cfg.d_tol
        if prev_rate is not None:
            for kind in rate:
                part = 0.5 * (rate[kind] + prev_rate[kind]) * (t - prev_time)
                report.budget_parts[kind] += part
                budget += part
        prev_rate, prev_time = rate, t
        g = glimm_now = snap.glimm(cfg.kappa)
        report.times.append(t)
        report.energy.append(weighted_entropy_integral(system, current["grid"], snap, profile, cone, t))
        report.budget.append(budget)
        report.l.append(g.l)
        report.q.append(g.q)
        report.np_total.append(glimm_now.np_total)

    observe(0.0)
    n_events = 0
    while current["grid"].time < t_end - 1e-14:
        g = current["grid"]
        dt = min(cfg.cfl * cfg.dx / lam_hat, t_end - g.time)
        current["grid"] = godunov_step(system, g, dt, lam_hat)
        report.max_entropy_production = max(report.max_entropy_production, current["grid"].entropy_production)
        sol.advance(current["grid"].time)
        if sol.policy.needs_traces:
            sol.refresh_shifts()
        for ev in sol.event_log[n_events:]:
            if ev.d_potential > 1e-12:
                report.monotonicity_violations += 1
        n_events = len(sol.event_log)
        observe(current["grid"].time)
    report.solution = sol
    return report
