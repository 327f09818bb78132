"""Run configuration loaded from a TOML file with one section per module."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .diagnostics import StabilityConfig
from .engine import EngineParams, PiecewiseConstant, ShiftPolicy, init, random_bv, single_wave_data
from .errors import ConfigError
from .system import IsentropicEuler, State, StateBox, SystemParams
from .weight import build_weight

INITIAL_KINDS = ("piecewise", "constant", "single-shock", "single-rarefaction", "random-bv")


@dataclass(frozen=True)
class SystemSection:
    gamma: float = 2.0
    rho_min: float = 0.25
    rho_max: float = 4.0
    v_max: float = 2.0
    c1: Optional[float] = None


@dataclass(frozen=True)
class EngineSection:
    delta_nu: float = 0.05
    eps_nu: float = 1e-4
    kappa: float = 10.0
    tv_cap: float = 0.2
    weight_c: float = 1.0
    policy: str = "rankine-hugoniot"
    offset: float = 0.0
    max_events: int = 1_000_000
    t_end: float = 1.0
    checkpoints: int = 5


@dataclass(frozen=True)
class InitialSection:
    kind: str = "single-shock"
    breakpoints: tuple = ()
    states: tuple = ()
    base: tuple = (1.0, 0.0)
    family: int = 1
    strength: float = 0.1
    x: float = 0.0
    n_jumps: int = 8
    tv: float = 0.2
    span: tuple = (0.0, 1.0)


@dataclass(frozen=True)
class WildSection:
    dx: float = 1.0 / 200
    cfl: float = 0.5
    bump_center: float = 0.1
    bump_width: float = 0.05
    bump_l2: float = 1e-2
    bump_direction: tuple = (1.0, 0.0)
    trace_cells: int = 2
    trace_skip: int = 0


@dataclass(frozen=True)
class ConeSection:
    r: float = 1.0
    v: Optional[float] = None
    factor: float = 4.0


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    level: int = 0
    out: str = "out"


SECTIONS = {"system": SystemSection, "engine": EngineSection, "initial": InitialSection,
            "wild": WildSection, "cone": ConeSection, "run": RunSection}


def _section(cls, raw: dict, name: str):
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}")
    vals = {}
    for key, val in raw.items():
        default = known[key].default
        if isinstance(default, tuple) or isinstance(val, list):
            val = tuple(tuple(v) if isinstance(v, list) else v for v in val)
        elif isinstance(default, float) and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        vals[key] = val
    return cls(**vals)


@dataclass(frozen=True)
class RunConfig:
    system: SystemSection = field(default_factory=SystemSection)
    engine: EngineSection = field(default_factory=EngineSection)
    initial: InitialSection = field(default_factory=InitialSection)
    wild: WildSection = field(default_factory=WildSection)
    cone: ConeSection = field(default_factory=ConeSection)
    run: RunSection = field(default_factory=RunSection)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        for name in raw:
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]")
        cfg = cls(**{name: _section(SECTIONS[name], raw[name], name) for name in raw})
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw)

    def override(self, dotted: str, value: Any) -> "RunConfig":
        """Copy with ``section.key`` replaced; the result is validated."""
        name, _, key = dotted.partition(".")
        if name not in SECTIONS or key not in {f.name for f in fields(SECTIONS[name])}:
            raise ConfigError(f"unknown parameter {dotted!r}")
        section = getattr(self, name)
        default = getattr(section, key)
        if isinstance(default, bool):
            value = str(value).lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            value = int(value)
        elif isinstance(default, float) or default is None:
            value = float(value)
        out = replace(self, **{name: replace(section, **{key: value})})
        out.validate()
        return out

    # -------------------------------------------------------------- derived objects

    @property
    def dx(self) -> float:
        return self.wild.dx / 2 ** self.run.level

    def system_obj(self) -> IsentropicEuler:
        s = self.system
        return IsentropicEuler(SystemParams(gamma=s.gamma, state_box=StateBox(s.rho_min, s.rho_max, s.v_max),
                                            c1=s.c1))

    def engine_params(self, record_history: bool = True) -> EngineParams:
        e = self.engine
        return EngineParams(delta_nu=e.delta_nu, eps_nu=e.eps_nu, kappa=e.kappa, tv_cap=e.tv_cap,
                            max_events=e.max_events, record_history=record_history)

    def policy(self) -> ShiftPolicy:
        return ShiftPolicy(self.engine.policy, self.engine.offset)

    def initial_data(self, system: IsentropicEuler) -> PiecewiseConstant:
        i = self.initial
        base = State(*map(float, i.base))
        if i.kind == "constant":
            return PiecewiseConstant.constant(base)
        if i.kind == "piecewise":
            return PiecewiseConstant(tuple(i.breakpoints), tuple(State(*map(float, u)) for u in i.states))
        if i.kind == "single-shock":
            return single_wave_data(system, base, i.family, abs(i.strength), i.x)
        if i.kind == "single-rarefaction":
            return single_wave_data(system, base, i.family, -abs(i.strength), i.x)
        rng = np.random.default_rng(self.run.seed)
        return random_bv(system, i.n_jumps, i.tv, rng, base, tuple(i.span))

    def stability_config(self) -> StabilityConfig:
        s, e, w, c = self.system, self.engine, self.wild, self.cone
        return StabilityConfig(gamma=s.gamma, box=StateBox(s.rho_min, s.rho_max, s.v_max),
                               delta_nu=e.delta_nu, eps_nu=e.eps_nu, kappa=e.kappa, weight_c=e.weight_c,
                               policy=e.policy, offset=e.offset, dx=self.dx, cfl=w.cfl, r=c.r, v=c.v,
                               bump_center=w.bump_center, bump_width=w.bump_width, bump_l2=w.bump_l2,
                               bump_direction=tuple(w.bump_direction), trace_cells=w.trace_cells,
                               trace_skip=w.trace_skip, factor=c.factor)

    # -------------------------------------------------------------- validation

    def validate(self):
        """Raise ConfigError naming the first failing constraint."""
        s, e, i, w, c, r = self.system, self.engine, self.initial, self.wild, self.cone, self.run
        checks = [
            (s.gamma > 1, f"system.gamma must be > 1, got {s.gamma}"),
            (0 < s.rho_min < s.rho_max, "system needs 0 < rho_min < rho_max"),
            (s.v_max >= 0, "system.v_max must be >= 0"),
            (e.delta_nu > 0, f"engine.delta_nu must be > 0, got {e.delta_nu}"),
            (e.eps_nu >= 0, f"engine.eps_nu must be >= 0, got {e.eps_nu}"),
            (e.kappa > 0, f"engine.kappa must be > 0, got {e.kappa}"),
            (e.tv_cap > 0, f"engine.tv_cap must be > 0, got {e.tv_cap}"),
            (e.weight_c > 0, f"engine.weight_c must be > 0, got {e.weight_c}"),
            (e.policy in ShiftPolicy.MODES, f"engine.policy must be one of {ShiftPolicy.MODES}"),
            (e.max_events >= 1, "engine.max_events must be >= 1"),
            (e.t_end > 0, f"engine.t_end must be > 0, got {e.t_end}"),
            (e.checkpoints >= 1, "engine.checkpoints must be >= 1"),
            (i.kind in INITIAL_KINDS, f"initial.kind must be one of {INITIAL_KINDS}"),
            (i.family in (1, 2), f"initial.family must be 1 or 2, got {i.family}"),
            (i.kind != "piecewise" or len(i.states) == len(i.breakpoints) + 1,
             "initial.states needs exactly one more entry than initial.breakpoints"),
            (i.kind != "random-bv" or (i.n_jumps >= 1 and 0 < i.tv <= e.tv_cap),
             "initial random-bv needs n_jumps >= 1 and 0 < tv <= engine.tv_cap"),
            (w.dx > 0, f"wild.dx must be > 0, got {w.dx}"),
            (0 < w.cfl <= 0.5, f"wild.cfl must lie in (0, 1/2], got {w.cfl}"),
            (w.trace_cells >= 1 and w.trace_skip >= 0, "wild.trace_cells >= 1 and wild.trace_skip >= 0"),
            (w.bump_l2 >= 0 and w.bump_width > 0, "wild needs bump_l2 >= 0 and bump_width > 0"),
            (c.r > 0, f"cone.r must be > 0, got {c.r}"),
            (c.v is None or c.v > 0, "cone.v must be > 0"),
            (c.factor >= 1, "cone.factor must be >= 1"),
            (r.level >= 0, f"run.level must be >= 0, got {r.level}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        system = self.system_obj()
        u0 = self.initial_data(system)
        for u in u0.states:
            if not system.box.contains(u, tol=1e-12):
                raise ConfigError(f"initial state {tuple(u)} lies outside the state box")
        if u0.total_variation() > e.tv_cap:
            raise ConfigError(f"initial total variation {u0.total_variation():.4g} exceeds engine.tv_cap")
        sol = init(u0, self.engine_params(record_history=False), system, self.policy())
        build_weight(sol, c=e.weight_c)
        if c.v is not None and c.v <= system.certified.lambda_hat:
            raise ConfigError(f"cone.v={c.v} must exceed lambda_hat={system.certified.lambda_hat:.4g}")
