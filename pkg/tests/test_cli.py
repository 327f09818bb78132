import csv
import json

import pytest

from fronttrack.cli import (EXIT_CONFIG, EXIT_OK, SCHEMA, check_condition_h, check_interactions, check_weights,
                            cmd_riemann, cmd_sweep, main)
from fronttrack.config import RunConfig
from fronttrack.errors import ConfigError
from fronttrack.system import IsentropicEuler, State
from fronttrack.wavecurves import compose

DATA = __import__("pathlib").Path(__file__).parent / "data"
REGRESSION = DATA / "regression.toml"


def _rows(path):
    with open(path) as fh:
        head = fh.readline()
        assert head.startswith(f"# schema: {SCHEMA}:")
        return list(csv.DictReader(fh))


def test_riemann_identical_states():
    out = cmd_riemann(State(1.0, 0.2), State(1.0, 0.2))
    assert out["waves"] == [] and out["sigma1"] == out["sigma2"] == 0.0


def test_riemann_single_shock():
    u = State(1.2, 0.1)
    out = cmd_riemann(u, compose(IsentropicEuler(), u, 0.1, 0.0))
    assert [w["family"] for w in out["waves"]] == [1]
    assert out["sigma1"] == pytest.approx(0.1, abs=1e-9) and abs(out["sigma2"]) <= 1e-9
    assert out["waves"][0]["kind"] == "shock"


def test_riemann_out_of_box(capsys):
    assert main(["riemann", "9,0", "1,0"]) == EXIT_CONFIG
    assert "outside the state box" in capsys.readouterr().err
    assert main(["riemann", "1,0", "1.1,0.05"]) == EXIT_OK
    body = json.loads(capsys.readouterr().out)
    assert body["schema"] == f"{SCHEMA}:riemann"


def test_evolve_constant_data(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[initial]\nkind = "constant"\nbase = [1.3, 0.2]\n')
    assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_OK
    assert _rows(tmp_path / "o" / "events.csv") == []
    snaps = json.loads((tmp_path / "o" / "snapshots.json").read_text())
    assert snaps["schema"] == f"{SCHEMA}:snapshots"
    assert all(s["breakpoints"] == [] and s["weights"] == [1.0] for s in snaps["snapshots"])


def test_evolve_matches_golden_log(tmp_path):
    assert main(["evolve", "--config", str(REGRESSION), "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    assert (tmp_path / "events.csv").read_bytes() == (DATA / "golden_events.csv").read_bytes()


def test_evolve_is_deterministic(tmp_path):
    for name in ("a", "b"):
        main(["evolve", "--config", str(REGRESSION), "--out", str(tmp_path / name), "--quiet"])
    for f in ("events.csv", "snapshots.json", "functionals.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_functional_column_nonincreasing(tmp_path):
    main(["evolve", "--config", str(REGRESSION), "--out", str(tmp_path), "--quiet"])
    lq = [float(r["LQ"]) for r in _rows(tmp_path / "functionals.csv")]
    assert len(lq) > 10
    assert all(b <= a + 1e-12 for a, b in zip(lq, lq[1:]))


def test_snapshot_json_round_trips_floats(tmp_path):
    main(["evolve", "--config", str(REGRESSION), "--out", str(tmp_path), "--quiet"])
    snaps = json.loads((tmp_path / "snapshots.json").read_text())["snapshots"]
    for s in snaps:
        assert len(s["states"]) == len(s["breakpoints"]) + 1
        assert all(len(u) == 2 for u in s["states"])
    assert snaps[-1]["time"] == 2.0


def test_stability_command(tmp_path):
    assert main(["stability", "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["schema"] == f"{SCHEMA}:stability" and report["weight_violations"] == 0
    rows = _rows(tmp_path / "timeseries.csv")
    assert float(rows[0]["t"]) == 0.0 and float(rows[0]["E"]) == pytest.approx(report["E0"])


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[engine]\ndelta = 0.1\n")
    assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "engine.delta" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="unknown section"):
        RunConfig.from_dict({"solver": {}})


@pytest.mark.parametrize("raw, word", [
    ({"wild": {"cfl": 0.9}}, "wild.cfl"),
    ({"engine": {"delta_nu": 0.0}}, "engine.delta_nu"),
    ({"engine": {"weight_c": 5.0}}, "weight constant"),
    ({"initial": {"kind": "piecewise", "breakpoints": [0.0], "states": [[1.0, 0.0]]}}, "initial.states"),
])
def test_first_failing_constraint_named(raw, word):
    with pytest.raises(ConfigError, match=word):
        RunConfig.from_dict(raw)


def test_level_halves_dx():
    cfg = RunConfig().override("run.level", 2)
    assert cfg.dx == pytest.approx(RunConfig().wild.dx / 4)


def test_check_suites():
    cfg = RunConfig.load(REGRESSION)
    inter = check_interactions(cfg)
    assert set(inter) == {"head-on", "overtaking-1", "overtaking-2", "c0_eps"}
    assert inter["overtaking-1"]["min_slope"] > 2.5 and inter["overtaking-2"]["min_slope"] > 2.5
    weights = check_weights(cfg.override("engine.weight_c", 0.5))
    assert weights["windows"]["pass"] and weights["monotone"]["pass"]
    h = check_condition_h(cfg)
    assert h["condition_h"]["pass"] and h["lipschitz"]["pass"]


def test_sweep_empty_values(capsys):
    assert main(["sweep", "engine.eps_nu", "--quiet"]) == EXIT_CONFIG
    with pytest.raises(ConfigError):
        cmd_sweep(RunConfig(), "engine.eps_nu", [])
    with pytest.raises(ConfigError):
        cmd_sweep(RunConfig(), "engine.nope", ["1"])


def test_eps_sweep_nonincreasing(tmp_path):
    values = ["1e-2", "1e-3", "1e-4", "1e-5"]
    assert main(["sweep", "engine.eps_nu", *values, "--config", str(REGRESSION), "--out", str(tmp_path),
                 "--jobs", "2", "--quiet"]) == EXIT_OK
    np_sup = [float(r["sup_np_total"]) for r in _rows(tmp_path / "sweep.csv")]
    assert all(b <= a for a, b in zip(np_sup, np_sup[1:])) and np_sup[-1] < np_sup[0]


def test_dx_sweep_initial_energy_decreases():
    rows = cmd_sweep(RunConfig(), "wild.dx", ["0.01", "0.005", "0.0025"])
    e0 = [r["E0"] for r in rows]
    assert all(b < a for a, b in zip(e0, e0[1:]))
