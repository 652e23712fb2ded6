"""Hover linearisation, filtered PD control and linear-loop analysis.

The PD law is ``kp*e + kd * N*s/(s + N) * e`` acting on the error
``e = desired - actual``. The filtered derivative branch is discretised with
the bilinear (Tustin) transform at the controller period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoSettle, ValidationError
from .params import QuadParams


@dataclass(frozen=True)
class PDGainSet:
    kp: float
    kd: float
    n: float

    def __post_init__(self):
        if not self.kp > 0:
            raise ValidationError("kp must be positive")
        if not self.kd >= 0:
            raise ValidationError("kd must be non-negative")
        if not self.n > 0:
            raise ValidationError("n must be positive")


ALTITUDE_GAINS = PDGainSet(kp=0.189, kd=0.878, n=114.286)
ATTITUDE_GAINS = PDGainSet(kp=3.08e-3, kd=1.43e-2, n=114.286)


@dataclass
class PDControllerState:
    """Per-axis memory of the discrete PD law.

    A freshly constructed state means "the error was zero before the first
    call", so a nonzero first error produces the usual derivative kick.
    """

    dt: float
    prev_error: float = 0.0
    deriv: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("controller period dt must be positive")

    def reset(self) -> None:
        self.prev_error = 0.0
        self.deriv = 0.0


def tustin_coefficients(gains: PDGainSet, dt: float) -> tuple[float, float]:
    """``(pole, gain)`` of ``D[k] = pole*D[k-1] + gain*(e[k] - e[k-1])``."""
    nd = gains.n * dt
    return (2.0 - nd) / (2.0 + nd), 2.0 * gains.kd * gains.n / (2.0 + nd)


def derivative_pole(gains: PDGainSet, dt: float) -> float:
    return tustin_coefficients(gains, dt)[0]


def pd_step(gains: PDGainSet, ctrl_state: PDControllerState, error: float) -> float:
    """One controller period: update ``ctrl_state`` and return the PD output."""
    pole, gain = tustin_coefficients(gains, ctrl_state.dt)
    d = pole * ctrl_state.deriv + gain * (error - ctrl_state.prev_error)
    ctrl_state.deriv = d
    ctrl_state.prev_error = error
    return gains.kp * error + d


def altitude_control(gains: PDGainSet, ctrl_state: PDControllerState, z_desired: float, z_actual: float, params: QuadParams) -> float:
    """Total thrust command: PD on altitude error plus the ``m*g`` feedforward."""
    return pd_step(gains, ctrl_state, z_desired - z_actual) + params.m * params.g


def attitude_control(gains: PDGainSet, ctrl_state: PDControllerState, angle_desired: float, angle_actual: float) -> float:
    """Body torque command for one attitude axis (angles in radians)."""
    return pd_step(gains, ctrl_state, angle_desired - angle_actual)


def hover_speed(params: QuadParams) -> float:
    """Rotor speed (rpm) at which four equal rotors carry the vehicle weight."""
    return math.sqrt(params.m * params.g / (4.0 * params.ct))


def hover_controls(params: QuadParams) -> tuple[float, float, float, float]:
    return (params.m * params.g, 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# linear plants


@dataclass(frozen=True)
class LinearPlant:
    """Double integrator ``1 / (K s^2)`` from control effort to output."""

    name: str
    K: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValidationError("plant constant must be positive")


def linear_plants(params: QuadParams) -> dict[str, LinearPlant]:
    """Hover plants for the shifted altitude input and the three attitude torques."""
    return {
        "z": LinearPlant("z", params.m),
        "phi": LinearPlant("phi", params.ixx),
        "theta": LinearPlant("theta", params.iyy),
        "psi": LinearPlant("psi", params.izz),
    }


def linearized_derivative(delta_state, delta_controls, params: QuadParams, psi0: float = 0.0) -> np.ndarray:
    """First-order model about hover at yaw ``psi0``.

    ``delta_state`` is the 12-vector deviation from the hover state and
    ``delta_controls`` the deviation ``(dU1, dU2, dU3, dU4)`` from
    ``(m*g, 0, 0, 0)``. Returns the predicted state derivative.
    """
    ds = np.asarray(delta_state, dtype=float)
    du = np.asarray(delta_controls, dtype=float)
    phi, theta = ds[6], ds[7]
    g = params.g
    out = np.zeros(12)
    out[0:3] = ds[3:6]
    out[3] = g * (theta * math.cos(psi0) + phi * math.sin(psi0))
    out[4] = g * (theta * math.sin(psi0) - phi * math.cos(psi0))
    out[5] = du[0] / params.m
    out[6:9] = ds[9:12]
    out[9] = du[1] / params.ixx
    out[10] = du[2] / params.iyy
    out[11] = du[3] / params.izz
    return out


# ---------------------------------------------------------------------------
# linear closed loop


@dataclass
class LinearTrace:
    t: np.ndarray
    y: np.ndarray
    reference: np.ndarray
    u: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return self.reference - self.y


def _reference_fn(reference, amplitude: float) -> Callable[[float], float]:
    if callable(reference):
        return reference
    if reference == "step":
        return lambda t: amplitude
    if reference == "ramp":
        return lambda t: amplitude * t
    if reference == "zero":
        return lambda t: 0.0
    raise ValueError(f"unknown reference {reference!r}")


def simulate_linear_closed_loop(
    plant: LinearPlant,
    gains: PDGainSet,
    reference="step",
    duration: float = 20.0,
    dt: float = 0.01,
    amplitude: float = 1.0,
) -> LinearTrace:
    """Unity-feedback loop of the discrete PD around ``1/(K s^2)``.

    The plant is advanced with its exact zero-order-hold solution, so the
    only discretisation error comes from the controller.
    """
    if not (duration > 0 and dt > 0):
        raise ValueError("duration and dt must be positive")
    n = int(round(duration / dt))
    ref = _reference_fn(reference, amplitude)
    ctrl = PDControllerState(dt)
    t = np.arange(n + 1) * dt
    y = np.zeros(n + 1)
    r = np.array([ref(tk) for tk in t], dtype=float)
    u = np.zeros(n + 1)
    pos = vel = 0.0
    for k in range(n + 1):
        y[k] = pos
        u[k] = pd_step(gains, ctrl, r[k] - pos)
        if k == n:
            break
        acc = u[k] / plant.K
        pos += vel * dt + 0.5 * acc * dt * dt
        vel += acc * dt
    return LinearTrace(t, y, r, u)


@dataclass(frozen=True)
class StepMetrics:
    rise_time: float
    settling_time: float
    overshoot: float
    peak: float


def _crossing_time(t, y, level):
    idx = np.flatnonzero(y >= level)
    if idx.size == 0:
        return math.nan
    k = idx[0]
    if k == 0:
        return float(t[0])
    y0, y1 = y[k - 1], y[k]
    return float(t[k - 1] + (level - y0) / (y1 - y0) * (t[k] - t[k - 1]))


def settling_index(y, target: float, band: float) -> int | None:
    """Index of the first sample after the last one outside ``target +/- band``.

    ``None`` means the trace ends outside the band.
    """
    outside = np.flatnonzero(np.abs(np.asarray(y) - target) > band)
    if outside.size == 0:
        return 0
    k = outside[-1] + 1
    return int(k) if k < len(y) else None


def step_metrics(trace=None, *, t=None, y=None, reference: float | None = None, band: float = 0.02) -> StepMetrics:
    """Rise time (10-90 %), 2 % settling time, percent overshoot and peak.

    Pass a :class:`LinearTrace` or explicit ``t``, ``y`` and ``reference``.
    Times are measured from ``t[0]``.

    Raises
    ------
    NoSettle
        If the trace never stays inside the band before it ends.
    """
    if trace is not None:
        t, y = trace.t, trace.y
        if reference is None:
            reference = float(trace.reference[-1])
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 2 or y.size != t.size:
        raise ValueError("trace needs at least two samples")
    if reference is None or reference == 0:
        raise ValueError("reference level must be nonzero")
    yn = y / reference
    t_rel = t - t[0]
    t10 = _crossing_time(t_rel, yn, 0.1)
    t90 = _crossing_time(t_rel, yn, 0.9)
    rise = t90 - t10
    k = settling_index(yn, 1.0, band)
    if k is None:
        raise NoSettle(f"response not inside the {band:.0%} band by t={t_rel[-1]:g}")
    peak_n = float(np.max(yn))
    overshoot = max(0.0, (peak_n - 1.0) * 100.0)
    return StepMetrics(rise, float(t_rel[k]), overshoot, peak_n * reference)


def steady_state_error(plant: LinearPlant, gains: PDGainSet, input="step", horizon: float = 30.0, dt: float = 0.01) -> float:
    """``|e(horizon)|`` of the linear loop for a step or ramp reference."""
    trace = simulate_linear_closed_loop(plant, gains, input, horizon, dt)
    return float(abs(trace.error[-1]))


def check_affine_not_linear(params: QuadParams, u: float = 1.0, v: float = 1.0, c: float = 2.0, gravity: float | None = None) -> dict[str, float]:
    """Additivity and homogeneity gaps of the altitude map ``f(F) = F/m - g``.

    ``additivity_gap = f(u+v) - (f(u) + f(v))`` equals ``g`` and
    ``homogeneity_gap = f(c*v) - c*f(v)`` equals ``(c - 1)*g``. Both vanish
    only without gravity; pass ``gravity=0.0`` to check that case, since
    :class:`QuadParams` itself requires positive gravity.
    """
    m = params.m
    g = params.g if gravity is None else gravity

    def f(force):
        return force / m - g

    return {
        "additivity_gap": f(u + v) - (f(u) + f(v)),
        "homogeneity_gap": f(c * v) - c * f(v),
    }
