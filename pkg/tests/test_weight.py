import numpy as np
import pytest
from hypothesis import given, strategies as st

from fronttrack.engine import EngineParams, PiecewiseConstant, init, random_bv, single_wave_data
from fronttrack.errors import ConfigError
from fronttrack.system import IsentropicEuler, State
from fronttrack.wavecurves import forward_wave_curve
from fronttrack.weight import (build_mu, build_weight, check_events, check_weight_jumps, max_increase,
                               ratio_window, weight_bound_constant)

U0 = State(1.0, 0.0)


def test_mu_examples(euler):
    sol = init(PiecewiseConstant.constant(U0), system=euler)
    assert len(build_mu(sol)) == 0
    sol = init(single_wave_data(euler, U0, 1, 0.1, x=0.0), system=euler)
    assert build_mu(sol).as_pairs() == [(0.0, pytest.approx(-0.1))]
    mid = forward_wave_curve(euler, U0, 1, 0.1)
    right = forward_wave_curve(euler, mid, 2, 0.1)
    sol = init(PiecewiseConstant((0.0, 1.0), (U0, mid, right)), system=euler)
    pairs = build_mu(sol).as_pairs()
    assert [p[0] for p in pairs] == [0.0, 1.0]
    assert [p[1] for p in pairs] == [pytest.approx(-0.1), pytest.approx(0.1)]


def test_rarefactions_carry_no_atoms(euler):
    sol = init(single_wave_data(euler, U0, 2, -0.15), EngineParams(delta_nu=0.05), system=euler)
    assert len(sol.fronts) == 3 and len(build_mu(sol)) == 0
    a = build_weight(sol)
    assert np.ptp(a.values) == 0.0
    assert check_weight_jumps(a, sol).ok


def test_single_two_shock_weight(euler):
    sol = init(single_wave_data(euler, U0, 2, 0.1, x=0.0), system=euler)
    a = build_weight(sol, c=1.0)
    assert a.at(-1.0) == pytest.approx(1.1) and a.at(1.0) == pytest.approx(1.2)
    lo, hi = ratio_window(2, 0.1, 1.0)
    assert lo <= 1.2 / 1.1 <= hi
    report = check_weight_jumps(a, sol)
    assert report.ok and len(report.checks) == 1
    js = a.to_json()
    assert js["breakpoints"] == [0.0] and len(js["weights"]) == 2


def test_precondition_names_constants(euler):
    sol = init(single_wave_data(euler, U0, 1, 0.1), system=euler)
    with pytest.raises(ConfigError, match="C=3"):
        build_weight(sol, c=3.0)


@given(st.floats(0.0, 1e-6), st.sampled_from([1, 2]))
def test_window_collapses_at_zero_strength(s, family):
    lo, hi = ratio_window(family, s, 1.0)
    assert abs(lo - 1) <= 2 * s + 1e-15 and abs(hi - 1) <= 2 * s + 1e-15 and lo <= hi


def test_max_increase_simple(euler):
    sol = init(single_wave_data(euler, U0, 2, 0.1, x=0.0), system=euler)
    a = build_weight(sol, c=1.0)
    assert max_increase(a, a) == 0.0


@pytest.fixture(scope="module")
def regression_runs():
    system = IsentropicEuler()
    runs = []
    for seed in range(6):
        u0 = random_bv(system, 8, 0.2, np.random.default_rng(100 + seed))
        sol = init(u0, EngineParams(delta_nu=0.02), system).advance(2.0)
        runs.append((u0, sol))
    return runs


def test_windows_and_bounds_on_regression_runs(regression_runs):
    c = 0.5
    for u0, sol in regression_runs:
        eps = u0.total_variation()
        c0 = weight_bound_constant(c, sol.params.kappa, eps)
        for h in sol.history:
            a = build_weight(h, h.glimm(sol.params.kappa), c)
            assert a.deviation() <= c0 * eps
            assert np.all(a.values > 0.5)
            report = check_weight_jumps(a, h)
            assert report.ok, report.violations


def test_weight_decays_at_events(regression_runs):
    for _, sol in regression_runs:
        checks = check_events(sol, c=0.5)
        assert checks
        for ck in checks:
            assert ck.increase <= 1e-12
            if ck.solver == "accurate":
                assert ck.mass_change <= 1.1 * ck.potential_drop + 1e-14
