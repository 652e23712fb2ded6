"""Vehicle parameters, key = value config files and the bifilar-pendulum estimator."""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

# config key -> QuadParams attribute
PARAM_KEYS = {
    "mass": "m",
    "gravity": "g",
    "arm_length": "d",
    "ixx": "ixx",
    "iyy": "iyy",
    "izz": "izz",
    "ct": "ct",
    "cd": "cd",
    "w_max": "w_max",
}


@dataclass(frozen=True)
class QuadParams:
    """Physical constants of the vehicle.

    Rotor speeds are in rpm everywhere, so ``ct`` is N/rpm^2 and ``cd`` is
    N*m/rpm^2. ``w_max`` is the rotor speed ceiling used by the mixer.
    """

    m: float = 0.9
    g: float = 9.81
    d: float = 0.21
    ixx: float = 1.467e-2
    iyy: float = 1.667e-2
    izz: float = 1.325e-2
    ct: float = 4.980e-8
    cd: float = 5.804e-9
    w_max: float = 12000.0

    def __post_init__(self):
        for key, attr in PARAM_KEYS.items():
            value = getattr(self, attr)
            if not math.isfinite(value):
                raise ValidationError(f"{key} must be finite")
            if value <= 0:
                raise ValidationError(f"{key} must be positive")

    @property
    def weight(self) -> float:
        return self.m * self.g

    def as_array(self) -> np.ndarray:
        """Packed ``[m, g, d, ixx, iyy, izz, ct, cd]`` for the numeric kernels."""
        return np.array(
            [self.m, self.g, self.d, self.ixx, self.iyy, self.izz, self.ct, self.cd],
            dtype=np.float64,
        )

    def replace(self, **changes) -> "QuadParams":
        return dataclasses.replace(self, **changes)

    def to_config(self) -> dict[str, float]:
        return {key: getattr(self, attr) for key, attr in PARAM_KEYS.items()}


def parse_keyvalue(text: str, path=None) -> dict[str, str]:
    """Parse ``key = value`` lines.

    Keys are lower-cased, ``#`` starts a comment, blank lines are skipped.
    Values are returned as raw strings.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, value = line.split("=", 1)
        key = key.strip().lower()
        if not key:
            raise ParseError("empty key", lineno, path)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno, path)
        out[key] = value.strip()
    return out


def read_keyvalue(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_keyvalue(fh.read(), path=os.fspath(path))


def to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"{key} must be a number, got {value!r}") from None


def to_float_list(key: str, value: str) -> list[float]:
    parts = [p for p in value.replace(",", " ").split() if p]
    return [to_float(key, p) for p in parts]


def params_from_mapping(mapping: dict[str, str], strict: bool = True) -> QuadParams:
    """Build :class:`QuadParams` from parsed config, defaulting missing keys."""
    kwargs = {}
    for key, value in mapping.items():
        if key in PARAM_KEYS:
            kwargs[PARAM_KEYS[key]] = to_float(key, value)
        elif strict:
            raise ValidationError(f"unknown parameter key {key!r}")
    return QuadParams(**kwargs)


def load_params(path) -> QuadParams:
    """Load vehicle parameters from a ``key = value`` file.

    Recognised keys: ``mass, gravity, arm_length, ixx, iyy, izz, ct, cd,
    w_max``. Missing keys take the default vehicle values.
    """
    return params_from_mapping(read_keyvalue(path))


def format_config(values: dict) -> str:
    lines = []
    for key, value in values.items():
        if isinstance(value, float):
            value = repr(value)
        elif isinstance(value, (list, tuple)):
            value = ", ".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BifilarMeasurement:
    """Stopwatch readings from one axis of a bifilar-pendulum swing test.

    Each entry of ``times`` covers ``n_osc`` full oscillations. ``d`` is the
    separation of the two strings and ``L`` their length.
    """

    times: tuple[float, ...]
    m: float = 0.9
    g: float = 9.81
    d: float = 0.21
    L: float = 0.24
    n_osc: int = 10

    def __post_init__(self):
        if len(self.times) == 0:
            raise ValidationError("times must not be empty")
        for name in ("m", "g", "d", "L", "n_osc"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if any(not t > 0 for t in self.times):
            raise ValidationError("times must be positive")

    @property
    def period(self) -> float:
        return float(np.mean(self.times)) / self.n_osc


def bifilar_inertia(meas: BifilarMeasurement) -> float:
    """Moment of inertia from a bifilar pendulum, ``m g T^2 d^2 / (16 pi^2 L)``."""
    T = meas.period
    return meas.m * meas.g * T**2 * meas.d**2 / (16.0 * math.pi**2 * meas.L)


def load_bifilar(path) -> dict[str, BifilarMeasurement]:
    """Read a measurement file and return one measurement per axis present.

    Keys: ``times_x, times_y, times_z`` (comma separated), ``n_osc, d, L,
    mass, gravity``.
    """
    raw = read_keyvalue(path)
    allowed = {"times_x", "times_y", "times_z", "n_osc", "d", "l", "mass", "gravity"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValidationError(f"unknown measurement key {unknown[0]!r}")
    common = {}
    if "mass" in raw:
        common["m"] = to_float("mass", raw["mass"])
    if "gravity" in raw:
        common["g"] = to_float("gravity", raw["gravity"])
    if "d" in raw:
        common["d"] = to_float("d", raw["d"])
    if "l" in raw:
        common["L"] = to_float("L", raw["l"])
    if "n_osc" in raw:
        n = to_float("n_osc", raw["n_osc"])
        if n != int(n):
            raise ValidationError("n_osc must be an integer")
        common["n_osc"] = int(n)
    out = {}
    for axis in ("x", "y", "z"):
        key = f"times_{axis}"
        if key in raw:
            out[axis] = BifilarMeasurement(times=tuple(to_float_list(key, raw[key])), **common)
    if not out:
        raise ValidationError("no times_x/times_y/times_z entries")
    return out
