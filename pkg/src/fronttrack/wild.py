"""First-order Godunov scheme with the exact Riemann solver and one-sided trace extraction."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError, RangeError
from .system import IsentropicEuler, State

SCHEMA = "fronttrack-grid/1"


@dataclass(frozen=True)
class GridSolution:
    x0: float
    dx: float
    rho: np.ndarray
    mom: np.ndarray
    time: float = 0.0
    entropy_production: float = 0.0

    def __post_init__(self):
        if not self.dx > 0:
            raise ConfigError(f"dx must be > 0, got {self.dx}")
        rho = np.asarray(self.rho, dtype=float)
        mom = np.asarray(self.mom, dtype=float)
        if rho.shape != mom.shape or rho.ndim != 1:
            raise ConfigError("rho and mom must be 1-d arrays of equal length")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mom", mom)

    @property
    def n(self) -> int:
        return len(self.rho)

    @property
    def cells(self) -> State:
        return State(self.rho, self.mom)

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + self.dx * (np.arange(self.n) + 0.5)

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n + 1)

    def mass(self) -> tuple[float, float]:
        return float(self.rho.sum() * self.dx), float(self.mom.sum() * self.dx)

    def cell_index(self, x: float) -> int:
        return int(np.floor((x - self.x0) / self.dx))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# {SCHEMA} time={self.time!r} x0={self.x0!r} dx={self.dx!r}\n")
            w = csv.writer(fh)
            w.writerow(("x_center", "rho", "mom"))
            for row in zip(self.centers, self.rho, self.mom):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "GridSolution":
        with open(path, newline="") as fh:
            header = fh.readline()
            if not header.startswith(f"# {SCHEMA}"):
                raise ConfigError(f"{path}: missing '{SCHEMA}' schema line")
            meta = dict(tok.split("=", 1) for tok in header.split()[2:])
            rows = list(csv.DictReader(fh))
        rho = np.array([float(r["rho"]) for r in rows])
        mom = np.array([float(r["mom"]) for r in rows])
        return cls(float(meta["x0"]), float(meta["dx"]), rho, mom, float(meta["time"]))

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "time": self.time, "x0": self.x0, "dx": self.dx,
                "rho": self.rho.tolist(), "mom": self.mom.tolist()}

    @classmethod
    def from_json(cls, data) -> "GridSolution":
        if isinstance(data, (str, bytes)) or hasattr(data, "read"):
            data = json.load(open(data) if isinstance(data, str) else data)
        if data.get("schema") != SCHEMA:
            raise ConfigError(f"unexpected grid schema {data.get('schema')!r}")
        return cls(data["x0"], data["dx"], np.array(data["rho"]), np.array(data["mom"]), data["time"])


def project(func, x0: float, dx: float, n: int, time: float = 0.0) -> GridSolution:
    """Exact cell averages of a piecewise-constant function (anything with breakpoints and states)."""
    edges = x0 + dx * np.arange(n + 1)
    bps = np.asarray(func.breakpoints, dtype=float)
    vals = np.array([[u.rho, u.mom] for u in func.states])
    # u = vals[0] + sum_j jump_j H(x - b_j), integrated from x0 to every edge
    jumps = np.diff(vals, axis=0)
    reach = np.maximum(edges[:, None] - np.maximum(bps, x0)[None, :], 0.0)
    prim = (edges - x0)[:, None] * vals[0][None, :] + reach @ jumps
    avg = np.diff(prim, axis=0) / dx
    rho, mom = avg[:, 0].copy(), avg[:, 1].copy()
    return GridSolution(x0, dx, rho, mom, time)


def bump_perturbation(g: GridSolution, center: float, width: float, l2_norm: float,
                      direction=(1.0, 0.0)) -> GridSolution:
    """Add a smooth compactly supported bump with the given discrete L2 norm."""
    z = (g.centers - center) / width
    prof = np.where(np.abs(z) < 1.0, np.cos(0.5 * np.pi * np.clip(z, -1, 1)) ** 2, 0.0)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    norm = np.sqrt((prof ** 2).sum() * g.dx)
    if norm == 0:
        raise ConfigError("bump support contains no cell centre")
    prof *= l2_norm / norm
    return replace(g, rho=g.rho + d[0] * prof, mom=g.mom + d[1] * prof)


# ---------------------------------------------------------------- exact Riemann solver, vectorized


def _branch(system, rho_k, c_k, rho):
    """Velocity change across the wave on one side and its derivative in the middle density."""
    g = system.gamma
    k = 2.0 / (g - 1.0)
    c = np.sqrt(g * rho ** (g - 1.0))
    rar = k * (c - c_k)
    d_rar = c / rho
    p, p_k = rho ** g, rho_k ** g
    num = (p - p_k) * (rho - rho_k)
    den = rho * rho_k
    phi = np.sqrt(np.maximum(num, 0.0) / den)
    d_num = g * rho ** (g - 1.0) * (rho - rho_k) + (p - p_k)
    safe = np.where(phi > 0, phi, 1.0)
    d_sh = np.where(phi > 0, (d_num * den - num * rho_k) / (den * den * 2.0 * safe), c_k / rho_k)
    shock = rho > rho_k
    return np.where(shock, phi, rar), np.where(shock, d_sh, d_rar)


def riemann_at_zero(system: IsentropicEuler, left: State, right: State, tol: float = 1e-13,
                    max_iter: int = 60) -> State:
    """Self-similar exact solution of the Riemann problems (left_i, right_i) evaluated at x/t = 0."""
    g = system.gamma
    k = 2.0 / (g - 1.0)
    rl, rr = np.asarray(left.rho, float), np.asarray(right.rho, float)
    if np.any(rl <= 0) or np.any(rr <= 0):
        raise NumericalError("vacuum state in the grid")
    vl, vr = left.mom / rl, right.mom / rr
    cl, cr = np.sqrt(g * rl ** (g - 1.0)), np.sqrt(g * rr ** (g - 1.0))
    if np.any(vr - vl >= k * (cl + cr)):
        raise NumericalError("Riemann problem generates vacuum")
    c_star = np.maximum(0.5 * (cl + cr) - 0.25 * (g - 1.0) * (vr - vl), 1e-8)
    rho = (c_star ** 2 / g) ** (1.0 / (g - 1.0))
    for _ in range(max_iter):
        fl, dl = _branch(system, rl, cl, rho)
        fr, dr = _branch(system, rr, cr, rho)
        step = (fl + fr + vr - vl) / (dl + dr)
        new = np.maximum(rho - step, 0.1 * rho)
        done = np.max(np.abs(new - rho) / new) < tol
        rho = new
        if done:
            break
    else:
        raise NumericalError("exact Riemann solver did not converge", float(np.max(np.abs(step))))
    fl, _ = _branch(system, rl, cl, rho)
    v = vl - fl
    c = np.sqrt(g * rho ** (g - 1.0))

    l_shock = rho > rl
    with np.errstate(divide="ignore", invalid="ignore"):
        s_l = np.where(l_shock, (rho * v - rl * vl) / (rho - rl), 0.0)
        s_r = np.where(rho > rr, (rr * vr - rho * v) / (rr - rho), 0.0)
    l_lo = np.where(l_shock, s_l, vl - cl)
    l_hi = np.where(l_shock, s_l, v - c)
    r_shock = rho > rr
    r_lo = np.where(r_shock, s_r, v + c)
    r_hi = np.where(r_shock, s_r, vr + cr)

    # sonic points inside a rarefaction: v -+ c = 0 on the fan's invariant
    cf1 = np.maximum((vl + k * cl) / (1.0 + k), 0.0)
    cf2 = np.maximum((k * cr - vr) / (1.0 + k), 0.0)
    rf1 = (cf1 ** 2 / g) ** (1.0 / (g - 1.0))
    rf2 = (cf2 ** 2 / g) ** (1.0 / (g - 1.0))

    out_r = np.select([0 < l_lo, 0 < l_hi, 0 <= r_lo, 0 < r_hi], [rl, rf1, rho, rf2], rr)
    out_v = np.select([0 < l_lo, 0 < l_hi, 0 <= r_lo, 0 < r_hi], [vl, cf1, v, -cf2], vr)
    return State(out_r, out_r * out_v)


# ---------------------------------------------------------------- time stepping


def stable_dt(g: GridSolution, lambda_hat: float, cfl: float = 0.5) -> float:
    return cfl * g.dx / lambda_hat


def godunov_step(system: IsentropicEuler, g: GridSolution, dt: float, lambda_hat: float | None = None,
                 check_entropy: bool = True, entropy_tol: float = 1e-12) -> GridSolution:
    """One conservative update with transmissive boundaries."""
    lam_hat = lambda_hat if lambda_hat is not None else system.certified.lambda_hat
    if lam_hat * dt / g.dx > 0.5 + 1e-12:
        raise ConfigError(f"CFL number {lam_hat * dt / g.dx:.4f} exceeds 1/2")
    rho = np.concatenate(([g.rho[0]], g.rho, [g.rho[-1]]))
    mom = np.concatenate(([g.mom[0]], g.mom, [g.mom[-1]]))
    face = riemann_at_zero(system, State(rho[:-1], mom[:-1]), State(rho[1:], mom[1:]))
    f_rho, f_mom = system.flux(face)
    r = dt / g.dx
    new_rho = g.rho - r * np.diff(f_rho)
    new_mom = g.mom - r * np.diff(f_mom)
    if np.any(new_rho <= 0) or not np.all(np.isfinite(new_mom)):
        raise NumericalError(f"grid state left the admissible set at t={g.time + dt:.6g}")
    production = 0.0
    if check_entropy:
        q = system.entropy_flux(face)
        prod = system.entropy(State(new_rho, new_mom)) - system.entropy(g.cells) + r * np.diff(q)
        scale = 1.0 + float(np.max(np.abs(system.entropy(g.cells))))
        production = float(prod.max())
        if production > entropy_tol * scale:
            raise NumericalError(f"cell entropy inequality violated at t={g.time + dt:.6g}", production)
    return GridSolution(g.x0, g.dx, new_rho, new_mom, g.time + dt, production)


def evolve(system: IsentropicEuler, g: GridSolution, t_end: float, cfl: float = 0.5,
           lambda_hat: float | None = None, callback: Callable | None = None) -> GridSolution:
    lam_hat = lambda_hat if lambda_hat is not None else system.certified.lambda_hat
    while g.time < t_end - 1e-14:
        dt = min(stable_dt(g, lam_hat, cfl), t_end - g.time)
        g = godunov_step(system, g, dt, lam_hat)
        if callback is not None:
            callback(g)
    return g


# ---------------------------------------------------------------- traces


def traces_at(g: GridSolution, x: float, k: int = 2, skip: int = 0) -> tuple[State, State]:
    """Averages of k cells on each side of the cell containing x.

    ``skip`` leaves that many further cells out on each side, which lets the
    traces step over a smeared discrete shock profile.
    """
    if k < 1 or skip < 0:
        raise ConfigError("trace width must be >= 1 cell and skip >= 0")
    j = g.cell_index(x)
    lo, hi = j - skip - k, j + 1 + skip + k
    if lo < 0 or hi > g.n:
        raise RangeError(f"x={x} is within {k + skip} cells of the grid boundary")
    left = State(float(g.rho[lo:j - skip].mean()), float(g.mom[lo:j - skip].mean()))
    right = State(float(g.rho[j + 1 + skip:hi].mean()), float(g.mom[j + 1 + skip:hi].mean()))
    return left, right


def trace_along(trajectory: Sequence[GridSolution], curve: Callable[[float], float], k: int = 2,
                skip: int = 0):
    """Left and right trace time series along x = curve(t) over the stored grid states."""
    lefts, rights = [], []
    for g in trajectory:
        lo, hi = traces_at(g, curve(g.time), k, skip)
        lefts.append(lo)
        rights.append(hi)
    return lefts, rights
