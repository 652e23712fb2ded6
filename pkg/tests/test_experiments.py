import math

import numpy as np
import pytest

from quadsim import experiments as ex
from quadsim.control_fuzzy import FISModel
from quadsim.control_linear import hover_speed
from quadsim.errors import DegenerateFiring, OutOfWindow, ParseError, SingularAttitude, ValidationError
from quadsim.experiments import CSV_COLUMNS, ScenarioConfig, SimTrace
from quadsim.params import QuadParams

P = QuadParams()
WE = hover_speed(P)


@pytest.fixture(scope="module")
def open_loop():
    return ex.run_open_loop()


@pytest.fixture(scope="module")
def case1_pd():
    return ex.run_closed_loop(ScenarioConfig.from_case("case1"))


def test_profile_examples():
    assert ex.open_loop_profile(0.0, P) == pytest.approx((6657.5,) * 4, abs=0.01)
    assert ex.open_loop_profile(0.5, P) == pytest.approx((WE + 2000,) * 4, rel=1e-14)
    w = ex.open_loop_profile(2.5, P)
    assert w[0] == pytest.approx(7157.5, abs=0.01)
    assert w[1] == pytest.approx(6907.5, abs=0.01)


@pytest.mark.parametrize("t", [-0.01, 8.01])
def test_profile_window(t):
    with pytest.raises(OutOfWindow):
        ex.open_loop_profile(t, P)


def test_open_loop_trace_shape(open_loop):
    assert len(open_loop) == 801
    assert np.array_equal(open_loop.t, np.arange(801) * 0.01)
    assert open_loop.duration == pytest.approx(8.0)


def test_open_loop_stages(open_loop):
    t = open_loop.t
    z, y = open_loop.axis("z"), open_loop.states[:, 1]
    phi, psi = open_loop.axis("phi"), open_loop.axis("psi")
    assert z[200] > 0
    roll = (t >= 2) & (t <= 4)
    assert np.max(phi[roll]) > 0
    assert y[400] < 0
    yaw = (t >= 6) & (t <= 8)
    assert psi[yaw][-1] > psi[yaw][0]


def test_open_loop_requires_rest():
    with pytest.raises(ValidationError):
        ex.run_open_loop(ScenarioConfig.open_loop(initial_state=ex.QuadState.hover(z=1.0)))


def test_open_loop_singular_attitude_keeps_partial_trace():
    cfg = ScenarioConfig.open_loop(params=P.replace(iyy=1e-5))
    with pytest.raises(SingularAttitude) as info:
        ex.run_open_loop(cfg)
    partial = info.value.trace
    assert 0 < len(partial) < 801
    assert np.all(np.isfinite(partial.states))


def test_config_validation():
    with pytest.raises(ValidationError, match="integer multiple"):
        ScenarioConfig(duration=1.0, dt=0.003)
    with pytest.raises(ValidationError):
        ScenarioConfig(kind="hover")
    with pytest.raises(ValidationError):
        ScenarioConfig(dt=0.0)
    with pytest.raises(ValidationError):
        ScenarioConfig.from_case("case9")
    assert ScenarioConfig(duration=20.0, dt=0.01).steps == 2000


def test_degrees_converted_at_boundary():
    cfg = ScenarioConfig.from_case("case2")
    assert cfg.initial_state.angles == pytest.approx((math.radians(70), math.radians(-60), math.radians(20)))
    assert ex.angles_deg(cfg.initial_state) == pytest.approx((70.0, -60.0, 20.0))


def test_zero_error_stays_at_hover():
    tr = ex.run_closed_loop(ScenarioConfig.regulation(0, 0, 0, 0))
    assert np.max(np.abs(tr.states)) < 1e-6
    assert np.allclose(tr.speeds, WE, rtol=0, atol=1e-6)
    assert not np.any(tr.saturated)


def test_runs_are_bit_identical(case1_pd):
    again = ex.run_closed_loop(ScenarioConfig.from_case("case1"))
    assert np.array_equal(case1_pd.states, again.states)
    assert np.array_equal(case1_pd.speeds, again.speeds)


def test_trace_length_and_spacing(case1_pd):
    assert len(case1_pd) == 2001
    assert np.array_equal(case1_pd.t, np.arange(2001) * 0.01)


def test_case1_yaw_coupling(case1_pd):
    psi = np.degrees(case1_pd.axis("psi"))
    assert np.max(np.abs(psi)) > 0
    assert abs(psi[-1]) < 0.1


def _norm(tr):
    idx = [2, 6, 7, 8]
    return np.linalg.norm(tr.states[-1, idx]) / np.linalg.norm(tr.states[0, idx])


def test_energy_sanity_nominal():
    assert _norm(ex.run_closed_loop(ScenarioConfig.from_case("nominal"))) < 0.01


@pytest.mark.xfail(strict=True, reason="altitude is still recovering from the 4 m dip at t=20 s (about 4% of the initial norm)")
def test_energy_sanity_case1(case1_pd):
    assert _norm(case1_pd) < 0.01


def test_csv_round_trip(tmp_path, case1_pd):
    path = tmp_path / "trace.csv"
    case1_pd.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2002
    row0 = lines[1].split(",")
    assert float(row0[CSV_COLUMNS.index("phi")]) == pytest.approx(30.0)
    assert float(row0[CSV_COLUMNS.index("p")]) == 0.0
    assert {r.split(",")[-1] for r in lines[1:]} <= {"0", "1"}
    back = SimTrace.read_csv(path)
    assert back.dt == pytest.approx(0.01)
    assert np.allclose(back.states, case1_pd.states, rtol=1e-8, atol=1e-15)
    assert np.array_equal(back.saturated, case1_pd.saturated)
    assert back.to_csv_text() == path.read_text()


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        SimTrace.read_csv(path)


def test_regulation_metrics_synthetic():
    t = np.arange(0, 10.001, 0.01)
    y = 2.0 * np.exp(-t) * np.cos(2 * t)
    m = ex.regulation_metrics(t, y)
    band = 0.04
    outside = np.flatnonzero(np.abs(y) > band)
    assert m.settling_time == pytest.approx(t[outside[-1] + 1])
    assert m.overshoot == pytest.approx(-np.min(y) / 2.0 * 100)
    assert m.overshoot_kind == "pct"
    flat = ex.regulation_metrics(t, np.zeros_like(t))
    assert flat.settling_time == 0.0 and flat.overshoot_kind == "abs"
    assert ex.regulation_metrics(t, np.r_[1.0, np.ones(t.size - 1) * 0.5]).settled is False


def test_compare_identical_traces(case1_pd):
    rep = ex.compare_controllers(case1_pd, case1_pd)
    for axis in ex.AXES:
        row = rep[axis]
        assert row.overshoot_delta == 0.0
        assert row.settling_improvement in (0.0, None)
    assert rep["phi"].settling_improvement == 0.0
    assert "psi max deviation" in rep.to_text()
    assert rep.to_csv().splitlines()[0].startswith("axis,initial,settling_a")


def test_improvement_formula():
    assert ex.improvement_pct(14.0, 8.0) == pytest.approx(42.857142857142854)
    assert ex.improvement_pct(12.0, 5.0) == pytest.approx(58.333333333333336)
    assert ex.improvement_pct(None, 5.0) is None


def test_compare_rejects_mismatch(case1_pd):
    short = ex.run_closed_loop(ScenarioConfig.from_case("case1", duration=10.0))
    with pytest.raises(ValidationError):
        ex.compare_controllers(case1_pd, short)
    other = ex.run_closed_loop(ScenarioConfig.from_case("case2", duration=20.0))
    with pytest.raises(ValidationError):
        ex.compare_controllers(case1_pd, other)


def test_fuzzy_needs_models():
    with pytest.raises(ValidationError):
        ex.run_closed_loop(ScenarioConfig.from_case("case1"), "fuzzy")


def test_degenerate_firing_propagates_with_trace():
    narrow = FISModel([[[0.01, 8.0, 0.0]], [[0.01, 8.0, 0.0]]], [[0.0, 0.0, 0.0]], ((-1, 1), (-1, 1)))
    with pytest.raises(DegenerateFiring) as info:
        ex.run_closed_loop(ScenarioConfig.from_case("case1"), "fuzzy", (narrow, narrow))
    assert len(info.value.trace) == 0


def test_pd_bumpless_removes_kick():
    cfg = ScenarioConfig.from_case("nominal", duration=0.5)
    kick = ex.run_closed_loop(cfg, "pd")
    smooth = ex.run_closed_loop(cfg, "pd_bumpless")
    assert abs(kick.controls[0, 1]) > 10 * abs(smooth.controls[0, 1])
