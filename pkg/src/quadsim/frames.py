"""Body/world rotations and the Euler-rate transform (ZYX convention).

Angles are in radians. The body-to-world matrix is ``Rz(psi) @ Ry(theta) @ Rx(phi)``.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import SingularAttitude

#: Distance from +/-pi/2 pitch inside which the Euler-rate map is refused.
GIMBAL_GUARD = 1e-6


class EulerAngles(NamedTuple):
    phi: float
    theta: float
    psi: float


class BodyRates(NamedTuple):
    p: float
    q: float
    r: float


def rot_x(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_body_to_world(angles) -> np.ndarray:
    """Rotation matrix taking body-frame vectors to the world frame.

    Parameters
    ----------
    angles : EulerAngles or sequence of 3 floats
        Roll, pitch, yaw in radians.

    Returns
    -------
    numpy.ndarray
        3x3 orthonormal matrix ``R`` with ``v_world = R @ v_body``.
    """
    phi, theta, psi = angles
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
            [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
            [-st, ct * sf, ct * cf],
        ]
    )


def world_to_body(angles) -> np.ndarray:
    """Inverse (transpose) of :func:`rotation_body_to_world`."""
    return rotation_body_to_world(angles).T


def check_attitude(theta: float) -> None:
    if not math.isfinite(theta) or abs(theta) >= math.pi / 2 - GIMBAL_GUARD:
        raise SingularAttitude(
            f"pitch {theta!r} rad is within {GIMBAL_GUARD:g} rad of +/-pi/2"
        )


def euler_rate_matrix(angles) -> np.ndarray:
    """Matrix mapping body rates ``(p, q, r)`` to Euler-angle rates.

    Raises
    ------
    SingularAttitude
        If pitch is within :data:`GIMBAL_GUARD` of +/-pi/2.
    """
    phi, theta, _ = angles
    check_attitude(theta)
    cf, sf = math.cos(phi), math.sin(phi)
    ct, tt = math.cos(theta), math.tan(theta)
    return np.array(
        [
            [1.0, sf * tt, cf * tt],
            [0.0, cf, -sf],
            [0.0, sf / ct, cf / ct],
        ]
    )


def body_rates_to_euler_rates(angles, rates) -> tuple[float, float, float]:
    """Return ``(phi_dot, theta_dot, psi_dot)`` for the given body rates."""
    eta = euler_rate_matrix(angles)
    out = eta @ np.asarray(rates, dtype=float)
    return float(out[0]), float(out[1]), float(out[2])
