"""Nonlinear Newton-Euler quadcopter model and fixed-step integration.

Forces and torques use rotor speeds in rpm directly with the rpm-based
coefficients of :class:`~quadsim.params.QuadParams`. No aerodynamic drag,
gyroscopic rotor terms or motor lag are modelled.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import SingularAttitude
from .frames import BodyRates, EulerAngles
from .params import QuadParams

STATE_SIZE = 12


class RotorSpeeds(NamedTuple):
    """Motor angular velocities in rpm, numbered as in the X layout."""

    w1: float
    w2: float
    w3: float
    w4: float


@dataclass(frozen=True)
class QuadState:
    """World position and velocity, Euler angles and body rates."""

    xi: tuple[float, float, float] = (0.0, 0.0, 0.0)
    xi_dot: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angles: EulerAngles = EulerAngles(0.0, 0.0, 0.0)
    rates: BodyRates = BodyRates(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([*self.xi, *self.xi_dot, *self.angles, *self.rates], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "QuadState":
        a = [float(v) for v in np.asarray(arr, dtype=float).reshape(STATE_SIZE)]
        return cls(tuple(a[0:3]), tuple(a[3:6]), EulerAngles(*a[6:9]), BodyRates(*a[9:12]))

    @classmethod
    def hover(cls, z: float = 0.0, phi: float = 0.0, theta: float = 0.0, psi: float = 0.0) -> "QuadState":
        """At-rest state at altitude ``z`` with the given attitude (radians)."""
        return cls(xi=(0.0, 0.0, z), angles=EulerAngles(phi, theta, psi))


@dataclass(frozen=True)
class StateDerivative:
    d_xi: tuple[float, float, float]
    d_xi_dot: tuple[float, float, float]
    d_angles: tuple[float, float, float]
    d_rates: tuple[float, float, float]

    def as_array(self) -> np.ndarray:
        return np.array([*self.d_xi, *self.d_xi_dot, *self.d_angles, *self.d_rates])

    @classmethod
    def from_array(cls, arr) -> "StateDerivative":
        a = [float(v) for v in arr]
        return cls(tuple(a[0:3]), tuple(a[3:6]), tuple(a[6:9]), tuple(a[9:12]))


def thrust_force(speeds, params: QuadParams) -> float:
    """Total rotor thrust ``ct * sum(w_i^2)`` in newtons."""
    w = np.asarray(speeds, dtype=float)
    return float(params.ct * np.sum(w * w))


def rotor_torques(speeds, params: QuadParams) -> tuple[float, float, float]:
    """Body torques ``(tau_phi, tau_theta, tau_psi)`` produced by the rotors."""
    w1, w2, w3, w4 = (float(v) ** 2 for v in speeds)
    tau_phi = params.d * params.ct * (w1 - w2 - w3 + w4)
    tau_theta = params.d * params.ct * (w1 + w2 - w3 - w4)
    tau_psi = params.cd * (w1 - w2 + w3 - w4)
    return tau_phi, tau_theta, tau_psi


def _as_state_array(state) -> np.ndarray:
    if isinstance(state, QuadState):
        return state.as_array()
    arr = np.ascontiguousarray(state, dtype=np.float64)
    if arr.shape != (STATE_SIZE,):
        raise ValueError(f"state must have shape ({STATE_SIZE},), got {arr.shape}")
    return arr


def derivative_array(s: np.ndarray, w: np.ndarray, prm: np.ndarray) -> np.ndarray:
    """Array-level right-hand side; raises :class:`SingularAttitude` at the guard."""
    out = np.empty(STATE_SIZE)
    if _kernels.derivative_into(s, w, prm, out) != _kernels.OK:
        raise SingularAttitude(f"pitch {s[7]!r} rad too close to +/-pi/2")
    return out


def state_derivative(state, speeds, params: QuadParams) -> StateDerivative:
    """Time derivative of the full state under constant rotor speeds."""
    s = _as_state_array(state)
    w = np.asarray(speeds, dtype=np.float64)
    return StateDerivative.from_array(derivative_array(s, w, params.as_array()))


def step_array(s: np.ndarray, w: np.ndarray, dt: float, prm: np.ndarray, method: str = "rk4") -> np.ndarray:
    out = np.empty(STATE_SIZE)
    if method == "rk4":
        status = _kernels.rk4_into(s, w, dt, prm, out)
    elif method == "euler":
        status = _kernels.euler_into(s, w, dt, prm, out)
    else:
        raise ValueError(f"unknown integrator {method!r}")
    if status != _kernels.OK:
        raise SingularAttitude("integration stage reached the pitch singularity guard")
    return out


def step_rk4(state, speeds, dt: float, params: QuadParams) -> QuadState:
    """Advance one fixed RK4 step with rotor speeds held constant (zero-order hold)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    s = _as_state_array(state)
    w = np.asarray(speeds, dtype=np.float64)
    return QuadState.from_array(step_array(s, w, dt, params.as_array(), "rk4"))


def step_euler(state, speeds, dt: float, params: QuadParams) -> QuadState:
    """Explicit Euler step, kept for integrator comparisons."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    s = _as_state_array(state)
    w = np.asarray(speeds, dtype=np.float64)
    return QuadState.from_array(step_array(s, w, dt, params.as_array(), "euler"))


def integrate_constant(state, speeds, dt: float, steps: int, params: QuadParams) -> np.ndarray:
    """RK4 trajectory under constant rotor speeds, shape ``(steps + 1, 12)``."""
    s = _as_state_array(state)
    w = np.asarray(speeds, dtype=np.float64)
    traj = np.full((steps + 1, STATE_SIZE), np.nan)
    done = _kernels.rk4_many(s, w, float(dt), int(steps), params.as_array(), traj)
    if done != steps:
        raise SingularAttitude(f"pitch singularity after {done} steps")
    return traj
