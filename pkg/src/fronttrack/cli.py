"""Command-line harness: riemann, evolve, stability, check and sweep subcommands."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .config import RunConfig
from .engine import init, write_event_log
from .errors import ConfigError, FrontTrackError, NumericalError
from .frontsolvers import accurate_solve
from .system import IsentropicEuler, State, StateBox, SystemParams
from .wavecurves import solve_riemann
from .weight import build_weight, check_events, check_weight_jumps

log = logging.getLogger("fronttrack")

SCHEMA = "fronttrack/1"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
CHECK_SUITES = ("interactions", "weights", "conditionH")


# ---------------------------------------------------------------- output helpers


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, kind: str, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"schema": f"{SCHEMA}:{kind}", **payload}
    path.write_text(json.dumps(body, indent=1, default=_plain) + "\n")


def _write_csv(path: Path, kind: str, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {SCHEMA}:{kind}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _state(text: str) -> State:
    try:
        rho, mom = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'rho,mom', got {text!r}") from None
    return State(rho, mom)


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.override("run.seed", args.seed)
    if args.level is not None:
        cfg = cfg.override("run.level", args.level)
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out if args.out else cfg.run.out)


# ---------------------------------------------------------------- commands


def cmd_riemann(left: State, right: State, gamma: float = 2.0, box: StateBox | None = None,
                delta: float = 0.05) -> dict:
    """Fan report for one Riemann problem."""
    system = IsentropicEuler(SystemParams(gamma=gamma, state_box=box or StateBox()))
    for name, u in (("left", left), ("right", right)):
        if not system.box.contains(u, tol=1e-12):
            raise ConfigError(f"{name} state {tuple(u)} lies outside the state box")
    if left == right:
        return {"left": list(left), "right": list(right), "sigma1": 0.0, "sigma2": 0.0, "middle": list(left),
                "waves": []}
    fan = solve_riemann(system, left, right, radius=4.0)
    fronts = accurate_solve(system, left, right, delta, (0.0, 0.0), radius=4.0).fronts
    waves = []
    for fam, sigma in ((1, fan.sigma1), (2, fan.sigma2)):
        parts = [f for f in fronts if f.family == fam]
        if not parts:
            continue
        waves.append({"family": fam, "kind": parts[0].kind, "strength": sigma,
                      "speeds": [f.speed for f in parts]})
    return {"left": list(left), "right": list(right), "sigma1": fan.sigma1, "sigma2": fan.sigma2,
            "middle": list(fan.middle), "residual": fan.residual, "waves": waves}


def run_evolve(cfg: RunConfig):
    system = cfg.system_obj()
    sol = init(cfg.initial_data(system), cfg.engine_params(), system, cfg.policy())
    times = np.linspace(0.0, cfg.engine.t_end, cfg.engine.checkpoints + 1)
    snaps = []
    for t in times:
        sol.advance(float(t))
        snap = sol.snapshot()
        snaps.append((snap, build_weight(snap, snap.glimm(cfg.engine.kappa), cfg.engine.weight_c, check=False)))
    return sol, snaps


def cmd_evolve(cfg: RunConfig, out: Path) -> dict:
    sol, snaps = run_evolve(cfg)
    kappa = cfg.engine.kappa
    _write_json(out / "snapshots.json", "snapshots",
                {"snapshots": [s.to_json(weights=a.values) | {"weight_breakpoints": a.breakpoints.tolist()}
                               for s, a in snaps]})
    events_path = out / "events.csv"
    events_path.parent.mkdir(parents=True, exist_ok=True)
    write_event_log(events_path, sol.event_log)
    body = events_path.read_text()
    events_path.write_text(f"# schema: {SCHEMA}:events\n" + body)
    rows = []
    for h in sol.history:
        g = h.glimm(kappa)
        rows.append((h.time, g.l, g.q, g.potential, g.np_total, h.total_variation()))
    _write_csv(out / "functionals.csv", "functionals", ("t", "L", "Q", "LQ", "np_total", "TV"), rows)
    return {"events": len(sol.event_log), "fronts": len(sol.fronts), "time": sol.time,
            "sup_np_total": max(r[4] for r in rows), "LQ_final": rows[-1][3]}


def cmd_stability(cfg: RunConfig, out: Path) -> tuple[dict, bool]:
    system = cfg.system_obj()
    psi0 = cfg.initial_data(system)
    report = diag.stability_experiment(cfg.stability_config(), psi0)
    _write_csv(out / "timeseries.csv", "stability-timeseries",
               ("t", "E", "L", "Q", "LQ", "np_total", "pos_D_sum"), report.rows())
    summary = report.summary()
    _write_json(out / "report.json", "stability", summary)
    return summary, report.hard_ok


def check_interactions(cfg: RunConfig) -> dict:
    system = cfg.system_obj()
    rng = np.random.default_rng(cfg.run.seed)
    rho = rng.uniform(0.5, 2.0, 4)
    bases = [State(float(r), float(r * v)) for r, v in zip(rho, rng.uniform(-1.0, 1.0, 4))]
    out = {}
    for case in ("head-on", "overtaking-1", "overtaking-2"):
        res = diag.interaction_sweep(system, bases, case)
        out[case] = {"min_slope": res["min_slope"], "c0": res["c0"], "pass": res["min_slope"] >= 2.7}
    c0 = max(v["c0"] for v in out.values())
    out["c0_eps"] = {"value": c0 * cfg.engine.tv_cap, "pass": c0 * cfg.engine.tv_cap <= 1.0}
    return out


def check_weights(cfg: RunConfig) -> dict:
    system = cfg.system_obj()
    sol = init(cfg.initial_data(system), cfg.engine_params(), system, cfg.policy())
    sol.advance(cfg.engine.t_end)
    worst_window, deviation = np.inf, 0.0
    for h in sol.history:
        a = build_weight(h, h.glimm(cfg.engine.kappa), cfg.engine.weight_c, check=False)
        worst_window = min(worst_window, check_weight_jumps(a, h).worst_margin)
        deviation = max(deviation, a.deviation())
    increases = [c.increase for c in check_events(sol, cfg.engine.weight_c)]
    worst_inc = max(increases, default=0.0)
    return {"windows": {"worst_margin": worst_window, "pass": worst_window >= -1e-12},
            "monotone": {"max_increase": worst_inc, "pass": worst_inc <= 1e-12},
            "deviation": {"value": deviation, "events": len(increases)}}


def check_condition_h(cfg: RunConfig) -> dict:
    system = cfg.system_obj()
    sol = init(cfg.initial_data(system), cfg.engine_params(), system, cfg.policy())
    sol.advance(cfg.engine.t_end)
    rng = np.random.default_rng(cfg.run.seed)
    pts = [x for h in sol.history for x in h.breakpoints] or [0.0]
    span = (min(pts) - 0.1, max(pts) + 0.1)
    span = (span[0], min(span[1], span[0] + 0.4 * sol.time * sol.lambda_hat))
    res = diag.condition_h(sol, 100, rng, span)
    lip = diag.lipschitz_in_time(sol, rng)
    return {"condition_h": {"C": res["C"], "pairs": res["pairs"], "pass": np.isfinite(res["C"])},
            "lipschitz": {"ratio": lip["ratio"], "bound": 1.1 * lip["bound"],
                          "pass": lip["ratio"] <= 1.1 * lip["bound"]}}


CHECKS = {"interactions": check_interactions, "weights": check_weights, "conditionH": check_condition_h}


def _sweep_one(args):
    cfg, param, value = args
    cfg = cfg.override(param, value)
    name = param.partition(".")[0]
    if name in ("wild", "cone"):
        report = diag.stability_experiment(cfg.stability_config(), cfg.initial_data(cfg.system_obj()))
        s = report.summary()
        return {"value": value, "E0": s["E0"], "E_final": s["E_final"], "budget": s["budget_final"],
                "positive_fraction": s["positive_fraction"], "holds": s["holds"]}
    sol, _ = run_evolve(cfg)
    kappa = cfg.engine.kappa
    return {"value": value, "events": len(sol.event_log),
            "sup_np_total": max(h.glimm(kappa).np_total for h in sol.history),
            "LQ_final": sol.glimm().potential, "fronts": len(sol.fronts)}


def cmd_sweep(cfg: RunConfig, param: str, values, jobs: int = 1) -> list[dict]:
    if not values:
        raise ConfigError("sweep needs at least one value")
    for v in values:
        cfg.override(param, v)
    work = [(cfg, param, v) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_sweep_one, work))
    return [_sweep_one(w) for w in work]


# ---------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--level", type=int, help="refinement index; dx is halved per level")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="fronttrack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("riemann", parents=[common], help="resolve one Riemann problem")
    r.add_argument("left", type=_state, help="rho,mom")
    r.add_argument("right", type=_state, help="rho,mom")
    r.add_argument("--gamma", type=float, default=2.0)

    sub.add_parser("evolve", parents=[common], help="run front tracking and write snapshots and events")
    sub.add_parser("stability", parents=[common], help="Godunov against front tracking relative-entropy run")

    c = sub.add_parser("check", parents=[common], help="run one property suite")
    c.add_argument("suite", choices=CHECK_SUITES)

    s = sub.add_parser("sweep", parents=[common], help="repeat a run over one parameter")
    s.add_argument("param", help="section.key, e.g. engine.eps_nu")
    s.add_argument("values", nargs="*")
    s.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        if args.command == "riemann":
            box = RunConfig.load(args.config).system_obj().box if args.config else None
            result = cmd_riemann(args.left, args.right, args.gamma, box)
            text = json.dumps({"schema": f"{SCHEMA}:riemann", **result}, indent=1)
            if args.out:
                _write_json(Path(args.out) / "riemann.json", "riemann", result)
            if not args.quiet:
                print(text)
            return EXIT_OK
        cfg = _load(args)
        out = _out_dir(args, cfg)
        if args.command == "evolve":
            log.info(json.dumps(cmd_evolve(cfg, out), default=_plain))
            return EXIT_OK
        if args.command == "stability":
            summary, ok = cmd_stability(cfg, out)
            log.info(json.dumps(summary, default=_plain))
            return EXIT_OK if ok else EXIT_FAIL
        if args.command == "check":
            result = CHECKS[args.suite](cfg)
            _write_json(out / f"check_{args.suite}.json", f"check-{args.suite}", result)
            ok = all(v.get("pass", True) for v in result.values())
            for name, v in result.items():
                log.info(f"{'PASS' if v.get('pass', True) else 'FAIL'} {args.suite}.{name} {json.dumps(v, default=_plain)}")
            return EXIT_OK if ok else EXIT_FAIL
        rows = cmd_sweep(cfg, args.param, args.values, args.jobs)
        keys = list(rows[0])
        _write_csv(out / "sweep.csv", "sweep", ["param"] + keys, ([args.param] + [r[k] for k in keys] for r in rows))
        for r in rows:
            log.info(json.dumps(r, default=_plain))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FrontTrackError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
