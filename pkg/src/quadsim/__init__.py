"""Quadcopter modelling, PD and ANFIS-trained fuzzy control."""
from .actuation import ControlVector, SpeedLimits, mix
from .control_linear import ALTITUDE_GAINS, ATTITUDE_GAINS, PDGainSet
from .dynamics import QuadState, RotorSpeeds
from .params import QuadParams

__version__ = "0.1.0"

__all__ = [
    "ALTITUDE_GAINS",
    "ATTITUDE_GAINS",
    "ControlVector",
    "PDGainSet",
    "QuadParams",
    "QuadState",
    "RotorSpeeds",
    "SpeedLimits",
    "mix",
]
