"""Scenario runs: open-loop excitation, PD and fuzzy regulation, comparisons."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .actuation import ControlVector, SpeedLimits, mix, speeds_to_controls
from .control_fuzzy import FISModel, fuzzy_controller_step
from .control_linear import (
    ALTITUDE_GAINS,
    ATTITUDE_GAINS,
    PDControllerState,
    PDGainSet,
    altitude_control,
    attitude_control,
    hover_speed,
    settling_index,
)
from .dynamics import QuadState, RotorSpeeds
from .errors import OutOfWindow, ParseError, SingularAttitude, ValidationError
from .frames import EulerAngles
from .params import QuadParams

AXES = ("z", "phi", "theta", "psi")
STATE_INDEX = {"z": 2, "phi": 6, "theta": 7, "psi": 8}
ANGLE_AXES = ("phi", "theta", "psi")

KINDS = ("open_loop", "closed_loop_pd", "closed_loop_fuzzy")

#: Built-in regulation cases: z0 (m), phi0, theta0, psi0 (deg).
CASES = {
    "nominal": (2.0, 15.0, 15.0, 15.0),
    "case1": (2.0, 30.0, -30.0, 0.0),
    "case2": (0.0, 70.0, -60.0, 20.0),
}

OPEN_LOOP_DURATION = 8.0

CSV_COLUMNS = (
    "t", "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "p", "q", "r",
    "u1", "u2", "u3", "u4", "w1", "w2", "w3", "w4", "sat1", "sat2", "sat3", "sat4",
)


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation run. Angles are radians here; see :meth:`regulation`."""

    kind: str = "closed_loop_pd"
    initial_state: QuadState = field(default_factory=QuadState)
    desired: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    duration: float = 20.0
    dt: float = 0.01
    params: QuadParams = field(default_factory=QuadParams)
    integrator: str = "rk4"
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        if not self.duration > 0:
            raise ValidationError("duration must be positive")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        ratio = self.duration / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValidationError("duration must be an integer multiple of dt")
        if self.integrator not in ("rk4", "euler"):
            raise ValidationError("integrator must be 'rk4' or 'euler'")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    @classmethod
    def regulation(cls, z0: float, phi0_deg: float, theta0_deg: float, psi0_deg: float, **kwargs) -> "ScenarioConfig":
        """Hover regulation from an initial altitude and attitude given in degrees."""
        state = QuadState.hover(z0, math.radians(phi0_deg), math.radians(theta0_deg), math.radians(psi0_deg))
        return cls(initial_state=state, **kwargs)

    @classmethod
    def from_case(cls, case: str, **kwargs) -> "ScenarioConfig":
        if case not in CASES:
            raise ValidationError(f"unknown case {case!r}; choose from {sorted(CASES)}")
        kwargs.setdefault("name", case)
        return cls.regulation(*CASES[case], **kwargs)

    @classmethod
    def open_loop(cls, **kwargs) -> "ScenarioConfig":
        kwargs.setdefault("duration", OPEN_LOOP_DURATION)
        kwargs.setdefault("name", "open_loop")
        return cls(kind="open_loop", **kwargs)


@dataclass
class SimTrace:
    """Uniformly sampled run record; row ``k`` is time ``k*dt``.

    ``controls`` holds the commanded thrust and torques (for open-loop runs,
    the ones produced by the applied speeds); ``speeds`` the rotor speeds held
    over the following step.
    """

    dt: float
    states: np.ndarray
    controls: np.ndarray
    speeds: np.ndarray
    saturated: np.ndarray
    name: str = ""

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    @property
    def duration(self) -> float:
        return (len(self) - 1) * self.dt

    def axis(self, name: str) -> np.ndarray:
        return self.states[:, STATE_INDEX[name]]

    def truncated(self, n: int) -> "SimTrace":
        return SimTrace(self.dt, self.states[:n], self.controls[:n], self.speeds[:n], self.saturated[:n], self.name)

    def to_csv_text(self) -> str:
        """CSV with angles in degrees, 9 significant digits, 0/1 saturation flags."""
        out = io.StringIO()
        out.write(",".join(CSV_COLUMNS) + "\n")
        states = self.states.copy()
        states[:, 6:9] = np.degrees(states[:, 6:9])
        g = "{:.9g}".format
        for k in range(len(self)):
            row = [g(k * self.dt)]
            row += [g(v) for v in states[k]]
            row += [g(v) for v in self.controls[k]]
            row += [g(v) for v in self.speeds[k]]
            row += ["1" if v else "0" for v in self.saturated[k]]
            out.write(",".join(row) + "\n")
        return out.getvalue()

    def write_csv(self, path) -> None:
        from ._io import atomic_write_text

        atomic_write_text(path, self.to_csv_text())

    @classmethod
    def read_csv(cls, path, name: str = "") -> "SimTrace":
        """Load a trace written by :meth:`write_csv` (angles back to radians)."""
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ParseError("unexpected trace header", 1, str(path))
            try:
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise ParseError(f"bad trace data: {exc}", None, str(path)) from None
        if data.shape[0] < 2:
            raise ParseError("trace needs at least two rows", None, str(path))
        t = data[:, 0]
        dt = float(t[1] - t[0])
        if not dt > 0 or np.max(np.abs(np.diff(t) - dt)) > 1e-6 * max(1.0, dt):
            raise ParseError("trace timestamps are not uniformly spaced", None, str(path))
        states = data[:, 1:13].copy()
        states[:, 6:9] = np.radians(states[:, 6:9])
        return cls(dt, states, data[:, 13:17].copy(), data[:, 17:21].copy(), data[:, 21:25] > 0.5, name)


def _empty_trace(config: ScenarioConfig) -> SimTrace:
    n = config.steps + 1
    return SimTrace(
        config.dt,
        np.full((n, dynamics.STATE_SIZE), np.nan),
        np.full((n, 4), np.nan),
        np.full((n, 4), np.nan),
        np.zeros((n, 4), dtype=bool),
        config.name,
    )


# ---------------------------------------------------------------------------
# open loop

# amplitude (rpm) per motor on each 2 s stage
_OPEN_LOOP_AMPLITUDES = np.array(
    [
        [2000.0, 500.0, 500.0, 500.0],
        [2000.0, 250.0, 500.0, 250.0],
        [2000.0, 250.0, 250.0, 500.0],
        [2000.0, 500.0, 250.0, 250.0],
    ]
)


def open_loop_profile(t: float, params: QuadParams) -> RotorSpeeds:
    """Piecewise sinusoidal rotor speeds driving climb, roll, pitch and yaw stages."""
    if not (-1e-9 <= t <= OPEN_LOOP_DURATION + 1e-9):
        raise OutOfWindow(f"open-loop profile is defined on [0, {OPEN_LOOP_DURATION:g}] s, got t={t!r}")
    stage = min(int(max(t, 0.0) // 2.0), 3)
    we = hover_speed(params)
    s = math.sin(math.pi * t)
    return RotorSpeeds(*(float(a * s + we) for a in _OPEN_LOOP_AMPLITUDES[:, stage]))


def run_open_loop(config: ScenarioConfig | None = None) -> SimTrace:
    """Integrate the open-loop excitation from rest.

    On a singular attitude the exception carries the partial record as
    ``exc.trace``.
    """
    config = config or ScenarioConfig.open_loop()
    if config.duration > OPEN_LOOP_DURATION + 1e-9:
        raise ValidationError(f"open-loop runs cover at most {OPEN_LOOP_DURATION:g} s")
    s = config.initial_state.as_array()
    if np.any(s != 0):
        raise ValidationError("open-loop runs start from the zero state")
    params = config.params
    prm = params.as_array()
    trace = _empty_trace(config)
    n = config.steps
    for k in range(n + 1):
        w = np.array(open_loop_profile(min(k * config.dt, OPEN_LOOP_DURATION), params))
        trace.states[k] = s
        trace.speeds[k] = w
        trace.controls[k] = speeds_to_controls(w, params)
        trace.saturated[k] = w > params.w_max
        if k == n:
            break
        try:
            s = dynamics.step_array(s, w, config.dt, prm, config.integrator)
        except SingularAttitude as exc:
            exc.trace = trace.truncated(k + 1)
            raise
    return trace


# ---------------------------------------------------------------------------
# closed loop


class PDController:
    """Four independent filtered-PD loops with altitude feedforward.

    After each call ``last`` maps axis name to ``(error, pd_output)``, where
    the altitude output excludes the ``m*g`` feedforward.

    By default the loops start from reset state, so a nonzero initial error
    produces a derivative kick. With ``bumpless=True`` the first call primes
    the previous error with the current one instead.
    """

    def __init__(self, params: QuadParams, dt: float, desired=(0.0, 0.0, 0.0, 0.0),
                 altitude_gains: PDGainSet = ALTITUDE_GAINS, attitude_gains: PDGainSet = ATTITUDE_GAINS,
                 bumpless: bool = False):
        self.params = params
        self.desired = tuple(float(v) for v in desired)
        self.gains = {"z": altitude_gains, "phi": attitude_gains, "theta": attitude_gains, "psi": attitude_gains}
        self.states = {axis: PDControllerState(dt) for axis in AXES}
        self.last: dict[str, tuple[float, float]] = {}
        self._prime = bumpless

    def __call__(self, s: np.ndarray) -> ControlVector:
        zd, phid, thetad, psid = self.desired
        if self._prime:
            for axis, ref in zip(AXES, self.desired):
                self.states[axis].prev_error = ref - s[STATE_INDEX[axis]]
            self._prime = False
        p = self.params
        u1 = altitude_control(self.gains["z"], self.states["z"], zd, s[2], p)
        out = [u1]
        self.last = {"z": (zd - s[2], u1 - p.m * p.g)}
        for axis, ref in zip(ANGLE_AXES, (phid, thetad, psid)):
            actual = s[STATE_INDEX[axis]]
            u = attitude_control(self.gains[axis], self.states[axis], ref, actual)
            self.last[axis] = (ref - actual, u)
            out.append(u)
        return ControlVector(*out)


class FuzzyController:
    """Altitude and shared attitude Sugeno models on (error, backward-difference rate).

    The first call has no previous error, so its rate input is zero.
    """

    def __init__(self, altitude_model: FISModel, attitude_model: FISModel, params: QuadParams, dt: float,
                 desired=(0.0, 0.0, 0.0, 0.0)):
        self.models = {"z": altitude_model, "phi": attitude_model, "theta": attitude_model, "psi": attitude_model}
        self.params = params
        self.dt = dt
        self.desired = tuple(float(v) for v in desired)
        self.prev: dict[str, float] = {}

    def __call__(self, s: np.ndarray) -> ControlVector:
        out = []
        for axis, ref in zip(AXES, self.desired):
            e = ref - s[STATE_INDEX[axis]]
            prev = self.prev.get(axis, e)
            e_dot = (e - prev) / self.dt
            self.prev[axis] = e
            out.append(fuzzy_controller_step(self.models[axis], e, e_dot, axis, self.params))
        return ControlVector(*out)


def make_controller(config: ScenarioConfig, controller, artifacts=None):
    """Build a controller callable from a name and its artifacts.

    ``artifacts`` is ``(altitude_gains, attitude_gains)`` for ``"pd"`` and
    ``"pd_bumpless"`` (optional) and ``(altitude_model, attitude_model)`` for
    ``"fuzzy"``.
    """
    if callable(controller):
        return controller
    if controller in ("pd", "pd_bumpless"):
        gains = artifacts or (ALTITUDE_GAINS, ATTITUDE_GAINS)
        return PDController(config.params, config.dt, config.desired, *gains, bumpless=controller == "pd_bumpless")
    if controller == "fuzzy":
        if artifacts is None:
            raise ValidationError("fuzzy control needs (altitude_model, attitude_model)")
        return FuzzyController(artifacts[0], artifacts[1], config.params, config.dt, config.desired)
    raise ValidationError(f"unknown controller {controller!r}")


def run_closed_loop(config: ScenarioConfig, controller="pd", artifacts=None, observer=None) -> SimTrace:
    """Regulate toward ``config.desired``: control, mix, one integration step, repeat.

    ``observer(k, controller)`` is called after each control evaluation and
    may inspect controller internals (used to log teacher data). Numerical
    failures propagate with the partial record attached as ``exc.trace``.
    """
    ctrl = make_controller(config, controller, artifacts)
    params = config.params
    prm = params.as_array()
    limits = SpeedLimits.from_params(params)
    trace = _empty_trace(config)
    s = config.initial_state.as_array()
    n = config.steps
    k = 0
    try:
        for k in range(n + 1):
            u = ctrl(s)
            w, sat = mix(u, params, limits)
            trace.states[k] = s
            trace.controls[k] = u
            trace.speeds[k] = w
            trace.saturated[k] = sat
            if observer is not None:
                observer(k, ctrl)
            if k == n:
                break
            s = dynamics.step_array(s, np.asarray(w), config.dt, prm, config.integrator)
    except Exception as exc:
        exc.trace = trace.truncated(k)
        raise
    return trace


# ---------------------------------------------------------------------------
# metrics and comparison


def display_scale(axis: str) -> float:
    return 180.0 / math.pi if axis in ANGLE_AXES else 1.0


@dataclass(frozen=True)
class AxisMetrics:
    """Regulation metrics for one axis, in display units (m or deg).

    ``overshoot`` is the excursion past the setpoint as a percentage of the
    initial deviation. For an axis that starts on its setpoint there is no
    initial deviation to normalise by, so ``overshoot`` is the peak absolute
    deviation and ``overshoot_kind`` is ``"abs"``; the settling band then
    uses the peak deviation as its scale.
    """

    axis: str
    initial: float
    peak_deviation: float
    final: float
    settling_time: float | None
    overshoot: float
    overshoot_kind: str = "pct"

    @property
    def settled(self) -> bool:
        return self.settling_time is not None


def regulation_metrics(t, y, axis: str = "", setpoint: float = 0.0, band_fraction: float = 0.02,
                       scale: float = 1.0) -> AxisMetrics:
    """Settling time in a band of ``band_fraction`` times the initial deviation."""
    t = np.asarray(t, dtype=float)
    dev = (np.asarray(y, dtype=float) - setpoint) * scale
    d0 = float(dev[0])
    peak = float(np.max(np.abs(dev)))
    if abs(d0) > 1e-12:
        ref = abs(d0)
        past = np.maximum(0.0, -math.copysign(1.0, d0) * dev)
        overshoot, kind = float(np.max(past)) / ref * 100.0, "pct"
    else:
        ref = peak
        overshoot, kind = peak, "abs"
    if ref <= 1e-12:
        settle = 0.0
    else:
        k = settling_index(dev, 0.0, band_fraction * ref)
        settle = None if k is None else float(t[k] - t[0])
    return AxisMetrics(axis, d0, peak, float(dev[-1]), settle, overshoot, kind)


def trace_metrics(trace: SimTrace, desired=(0.0, 0.0, 0.0, 0.0)) -> dict[str, AxisMetrics]:
    t = trace.t
    return {
        axis: regulation_metrics(t, trace.axis(axis), axis, ref, scale=display_scale(axis))
        for axis, ref in zip(AXES, desired)
    }


def improvement_pct(base: float | None, new: float | None) -> float | None:
    """``(base - new) / base * 100``; ``None`` if either value is missing."""
    if base is None or new is None:
        return None
    if base == 0:
        return 0.0 if new == 0 else None
    return (base - new) / base * 100.0


@dataclass(frozen=True)
class AxisComparison:
    axis: str
    a: AxisMetrics
    b: AxisMetrics

    @property
    def settling_improvement(self) -> float | None:
        return improvement_pct(self.a.settling_time, self.b.settling_time)

    @property
    def overshoot_delta(self) -> float:
        return self.b.overshoot - self.a.overshoot


@dataclass
class ComparisonReport:
    labels: tuple[str, str]
    rows: dict[str, AxisComparison]
    dt: float
    duration: float

    def __getitem__(self, axis: str) -> AxisComparison:
        return self.rows[axis]

    @property
    def psi_peak_deg(self) -> tuple[float, float]:
        row = self.rows["psi"]
        return row.a.peak_deviation, row.b.peak_deviation

    def to_text(self) -> str:
        la, lb = self.labels

        def fmt(v, spec="8.2f"):
            return f"{v:{spec}}" if v is not None else f"{'n/s':>8}"

        lines = [
            f"controller comparison: {la} (A) vs {lb} (B), dt={self.dt:g} s, duration={self.duration:g} s",
            f"{'axis':<6} {'unit':<4} {'init':>8} {'settle A':>8} {'settle B':>8} {'improv%':>8} "
            f"{'over A':>8} {'over B':>8} {'delta':>8}",
        ]
        for axis, row in self.rows.items():
            unit = "deg" if axis in ANGLE_AXES else "m"
            okind = "" if row.a.overshoot_kind == "pct" else f" ({unit} abs)"
            lines.append(
                f"{axis:<6} {unit:<4} {row.a.initial:8.3f} {fmt(row.a.settling_time)} {fmt(row.b.settling_time)} "
                f"{fmt(row.settling_improvement)} {row.a.overshoot:8.2f} {row.b.overshoot:8.2f} "
                f"{row.overshoot_delta:8.2f}{okind}"
            )
        pa, pb = self.psi_peak_deg
        lines.append(f"psi max deviation: A {pa:.2f} deg, B {pb:.2f} deg")
        lines.append("n/s = did not settle within the run; settling band 2% of initial deviation")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        head = (
            "axis,initial,settling_a,settling_b,settling_improvement_pct,overshoot_a,overshoot_b,"
            "overshoot_delta,overshoot_kind,peak_dev_a,peak_dev_b,final_a,final_b"
        )
        g = "{:.9g}".format

        def opt(v):
            return "" if v is None else g(v)

        lines = [head]
        for axis, row in self.rows.items():
            lines.append(
                ",".join(
                    [
                        axis,
                        g(row.a.initial),
                        opt(row.a.settling_time),
                        opt(row.b.settling_time),
                        opt(row.settling_improvement),
                        g(row.a.overshoot),
                        g(row.b.overshoot),
                        g(row.overshoot_delta),
                        row.a.overshoot_kind,
                        g(row.a.peak_deviation),
                        g(row.b.peak_deviation),
                        g(row.a.final),
                        g(row.b.final),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def compare_controllers(trace_a: SimTrace, trace_b: SimTrace, labels=("pd", "fuzzy"),
                        desired=(0.0, 0.0, 0.0, 0.0)) -> ComparisonReport:
    """Per-axis settling and overshoot of two runs from the same initial state.

    Trace A is the baseline: improvement is ``(t_A - t_B) / t_A * 100``.
    Axes that never settle are reported with ``settling_time=None``.
    """
    if abs(trace_a.dt - trace_b.dt) > 1e-12 or len(trace_a) != len(trace_b):
        raise ValidationError("traces must share dt and duration")
    if not np.allclose(trace_a.states[0], trace_b.states[0], rtol=0, atol=1e-9):
        raise ValidationError("traces must start from the same initial state")
    ma = trace_metrics(trace_a, desired)
    mb = trace_metrics(trace_b, desired)
    rows = {axis: AxisComparison(axis, ma[axis], mb[axis]) for axis in AXES}
    return ComparisonReport(tuple(labels), rows, trace_a.dt, trace_a.duration)


def angles_deg(state: QuadState) -> EulerAngles:
    return EulerAngles(*(math.degrees(a) for a in state.angles))
