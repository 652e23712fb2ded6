import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadsim.control_linear import hover_speed
from quadsim.errors import ParseError, ValidationError
from quadsim.params import (
    BifilarMeasurement,
    QuadParams,
    bifilar_inertia,
    format_config,
    load_bifilar,
    load_params,
    parse_keyvalue,
)

TIMES_X = (12.15, 12.23, 12.15)
TIMES_Y = (12.76, 13.15, 13.09)
TIMES_Z = (13.32, 13.12, 13.41)

# 30-digit evaluation of m g T^2 d^2 / (16 pi^2 L), frozen
IXX_FROZEN = 0.0152326678207794262778750411016
IZZ_FROZEN = 0.0181273065254697277836409371579


def test_defaults_match_vehicle_table():
    p = QuadParams()
    assert (p.m, p.g, p.d) == (0.9, 9.81, 0.21)
    assert (p.ixx, p.iyy, p.izz) == (1.467e-2, 1.667e-2, 1.325e-2)
    assert (p.ct, p.cd) == (4.980e-8, 5.804e-9)
    assert p.w_max == 12000.0


@pytest.mark.parametrize("field", ["m", "g", "d", "ixx", "iyy", "izz", "ct", "cd", "w_max"])
def test_nonpositive_rejected(field):
    with pytest.raises(ValidationError, match="must be positive"):
        QuadParams().replace(**{field: 0.0})


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("")
    assert load_params(path) == QuadParams()


def test_negative_mass_message(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("mass = -1\n")
    with pytest.raises(ValidationError, match="mass must be positive"):
        load_params(path)


def test_override_ct_changes_hover_speed(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("# thrust only\nCT = 1.992e-7   # four times the default\n")
    p = load_params(path)
    assert p.ct == 1.992e-7
    assert p.replace(ct=4.980e-8) == QuadParams()
    assert hover_speed(p) == pytest.approx(hover_speed(QuadParams()) / 2, rel=1e-12)


def test_parse_errors_carry_line_numbers(tmp_path):
    with pytest.raises(ParseError) as info:
        parse_keyvalue("mass = 1\n\njunk line\n", path="cfg")
    assert info.value.line == 3
    assert "cfg:3" in str(info.value)
    with pytest.raises(ParseError, match="duplicate"):
        parse_keyvalue("mass = 1\nMASS = 2\n")
    with pytest.raises(ParseError, match="empty key"):
        parse_keyvalue(" = 2\n")


def test_unknown_key_and_bad_number(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("weight = 3\n")
    with pytest.raises(ValidationError, match="unknown"):
        load_params(path)
    path.write_text("mass = heavy\n")
    with pytest.raises(ValidationError, match="mass must be a number"):
        load_params(path)


def test_config_round_trip(tmp_path):
    p = QuadParams(m=1.25, ct=5.5e-8)
    path = tmp_path / "p.cfg"
    path.write_text(format_config(p.to_config()))
    assert load_params(path) == p


def test_bifilar_x_axis():
    ixx = bifilar_inertia(BifilarMeasurement(TIMES_X))
    assert ixx == pytest.approx(IXX_FROZEN, rel=1e-12)
    assert abs(ixx - 1.467e-2) / 1.467e-2 < 0.06


def test_bifilar_z_axis():
    assert bifilar_inertia(BifilarMeasurement(TIMES_Z)) == pytest.approx(IZZ_FROZEN, rel=1e-12)


def test_bifilar_doubling_length_halves():
    a = bifilar_inertia(BifilarMeasurement(TIMES_X))
    b = bifilar_inertia(BifilarMeasurement(TIMES_X, L=0.48))
    assert b == pytest.approx(a / 2, rel=1e-14)


def test_bifilar_pre_divided_times():
    a = bifilar_inertia(BifilarMeasurement(TIMES_X, n_osc=10))
    b = bifilar_inertia(BifilarMeasurement(tuple(t / 10 for t in TIMES_X), n_osc=1))
    assert b == pytest.approx(a, rel=1e-14)


def test_bifilar_validation():
    with pytest.raises(ValidationError):
        BifilarMeasurement(())
    with pytest.raises(ValidationError):
        BifilarMeasurement((1.0, -2.0))


def test_load_bifilar_file(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text(
        "times_x = 12.15, 12.23, 12.15\ntimes_y = 12.76 13.15 13.09\ntimes_z = 13.32, 13.12, 13.41\n"
        "n_osc = 10\nd = 0.21\nL = 0.24\nmass = 0.9\n"
    )
    meas = load_bifilar(path)
    assert set(meas) == {"x", "y", "z"}
    assert meas["y"].times == TIMES_Y
    assert bifilar_inertia(meas["x"]) == pytest.approx(IXX_FROZEN, rel=1e-12)


times_st = st.lists(st.floats(1.0, 30.0), min_size=1, max_size=6)


@given(times_st, st.randoms(use_true_random=False))
def test_bifilar_permutation_invariant(times, rnd):
    shuffled = list(times)
    rnd.shuffle(shuffled)
    a = bifilar_inertia(BifilarMeasurement(tuple(times)))
    b = bifilar_inertia(BifilarMeasurement(tuple(shuffled)))
    assert b == pytest.approx(a, rel=1e-12)


@given(times_st, st.floats(0.1, 10.0))
def test_bifilar_scaling(times, k):
    a = bifilar_inertia(BifilarMeasurement(tuple(times)))
    b = bifilar_inertia(BifilarMeasurement(tuple(k * t for t in times)))
    assert b == pytest.approx(k * k * a, rel=1e-12)
    assert math.isfinite(b)
