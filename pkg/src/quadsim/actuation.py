"""Mixer between controller outputs (thrust, torques) and rotor speeds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import RotorSpeeds, rotor_torques, thrust_force
from .errors import ValidationError
from .params import QuadParams


class ControlVector(NamedTuple):
    """Total thrust ``u1`` (N) and body torques ``u2..u4`` (N*m)."""

    u1: float
    u2: float
    u3: float
    u4: float


@dataclass(frozen=True)
class SpeedLimits:
    w_min: float = 0.0
    w_max: float = 12000.0

    def __post_init__(self):
        if not (0.0 <= self.w_min < self.w_max):
            raise ValidationError("speed limits must satisfy 0 <= w_min < w_max")

    @classmethod
    def from_params(cls, params: QuadParams) -> "SpeedLimits":
        return cls(0.0, params.w_max)


# sign pattern of (u2, u3, u4) in each rotor's squared speed
_MIX_SIGNS = np.array(
    [
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, -1.0],
    ]
)


def squared_speeds(controls, params: QuadParams) -> np.ndarray:
    """Unclamped squared rotor speeds (rpm^2) that realise ``controls`` exactly."""
    u1, u2, u3, u4 = (float(v) for v in controls)
    base = u1 / (4.0 * params.ct)
    terms = np.array(
        [
            u2 / (4.0 * params.d * params.ct),
            u3 / (4.0 * params.d * params.ct),
            u4 / (4.0 * params.cd),
        ]
    )
    return base + _MIX_SIGNS @ terms


def mix(controls, params: QuadParams, limits: SpeedLimits | None = None) -> tuple[RotorSpeeds, tuple[bool, bool, bool, bool]]:
    """Convert thrust and torques to rotor speeds, clamping to ``limits``.

    Returns the speeds and a per-motor flag that is true when the requested
    squared speed fell outside ``[w_min^2, w_max^2]`` and had to be clamped.
    """
    if limits is None:
        limits = SpeedLimits.from_params(params)
    sq = squared_speeds(controls, params)
    lo, hi = limits.w_min**2, limits.w_max**2
    saturated = (sq < lo) | (sq > hi)
    w = np.sqrt(np.clip(sq, lo, hi))
    return RotorSpeeds(*(float(v) for v in w)), tuple(bool(s) for s in saturated)


def speeds_to_controls(speeds, params: QuadParams) -> ControlVector:
    """Forward map: thrust and torques actually produced by ``speeds``."""
    return ControlVector(thrust_force(speeds, params), *rotor_torques(speeds, params))


def speed_to_pwm(w, limits: SpeedLimits):
    """Affine report mapping of rpm onto a 1000-2000 PWM scale."""
    w = np.asarray(w, dtype=float)
    return 1000.0 + 1000.0 * (w - limits.w_min) / (limits.w_max - limits.w_min)


def is_feasible(controls, params: QuadParams, limits: SpeedLimits) -> bool:
    sq = squared_speeds(controls, params)
    return bool(np.all(sq >= limits.w_min**2) and np.all(sq <= limits.w_max**2)) and all(
        math.isfinite(float(v)) for v in controls
    )
