import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from quadsim.actuation import (
    ControlVector,
    SpeedLimits,
    is_feasible,
    mix,
    speed_to_pwm,
    speeds_to_controls,
    squared_speeds,
)
from quadsim.errors import ValidationError
from quadsim.params import QuadParams

P = QuadParams()
WIDE = SpeedLimits(0.0, 1e6)


def test_hover_mix():
    w, sat = mix(ControlVector(P.m * P.g, 0, 0, 0), P, WIDE)
    assert np.allclose(w, 6657.5, atol=0.01)
    assert sat == (False, False, False, False)


def test_zero_controls_give_w_min():
    w, sat = mix((0, 0, 0, 0), P, SpeedLimits(0.0, 12000.0))
    assert w == (0.0, 0.0, 0.0, 0.0)
    assert sat == (False, False, False, False)
    w, sat = mix((0, 0, 0, 0), P, SpeedLimits(1000.0, 12000.0))
    assert w == (1000.0,) * 4
    assert all(sat)


def test_clamping_and_flags():
    w, sat = mix((P.m * P.g, 2.0, 0, 0), P)
    assert w[1] == 0.0 and w[2] == 0.0
    assert sat == (False, True, True, False)
    w, sat = mix((100.0, 0, 0, 0), P)
    assert w == (12000.0,) * 4
    assert all(sat)


def test_forward_map_examples():
    u = speeds_to_controls((6657.5,) * 4, P)
    assert u.u1 == pytest.approx(8.829, abs=5e-4)
    assert u[1:] == (0.0, 0.0, 0.0)
    assert speeds_to_controls((0, 0, 0, 0), P) == (0, 0, 0, 0)
    u = speeds_to_controls((7000, 6000, 6000, 7000), P)
    assert u.u2 > 0 and u.u3 == 0 and u.u4 == 0


def test_sign_pattern_rows():
    # each torque raises exactly the rotors that produce it
    base = squared_speeds((P.m * P.g, 0, 0, 0), P)
    assert np.all(np.sign(squared_speeds((P.m * P.g, 0.1, 0, 0), P) - base) == [1, -1, -1, 1])
    assert np.all(np.sign(squared_speeds((P.m * P.g, 0, 0.1, 0), P) - base) == [1, 1, -1, -1])
    assert np.all(np.sign(squared_speeds((P.m * P.g, 0, 0, 0.01), P) - base) == [1, -1, 1, -1])


def test_limits_validation():
    with pytest.raises(ValidationError):
        SpeedLimits(100.0, 100.0)
    with pytest.raises(ValidationError):
        SpeedLimits(-1.0, 100.0)


def test_pwm_report_column():
    lim = SpeedLimits(0.0, 12000.0)
    assert np.allclose(speed_to_pwm([0.0, 6000.0, 12000.0], lim), [1000.0, 1500.0, 2000.0])


controls = st.tuples(
    st.floats(2.0, 20.0), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-0.03, 0.03)
)


@given(controls)
def test_round_trip(u):
    lim = SpeedLimits(0.0, 12000.0)
    assume(is_feasible(u, P, lim))
    w, sat = mix(u, P, lim)
    assert not any(sat)
    back = speeds_to_controls(w, P)
    scale = max(abs(v) for v in u)
    for a, b in zip(back, u):
        assert abs(a - b) <= 1e-9 * max(abs(b), 1e-9 * scale) or abs(a - b) <= 1e-12 * scale


@given(st.floats(0.5, 20.0), st.floats(0.01, 5.0))
def test_monotone_in_thrust(u1, du):
    a, _ = mix((u1, 0, 0, 0), P, WIDE)
    b, _ = mix((u1 + du, 0, 0, 0), P, WIDE)
    assert all(y > x for x, y in zip(a, b))


@given(st.floats(0.0, 50.0))
def test_symmetric_without_torques(u1):
    w, _ = mix((u1, 0, 0, 0), P)
    assert w[0] == w[1] == w[2] == w[3]
