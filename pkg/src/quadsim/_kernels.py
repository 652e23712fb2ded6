"""Inner-loop numeric kernels.

The rigid-body kernels are written in scalar style so the same source runs
compiled (numba) or interpreted. The fuzzy-inference batch kernel has two
genuinely different implementations, a loop version that numba compiles and a
vectorised numpy version used when numba is off.

State vector layout: ``[x, y, z, vx, vy, vz, phi, theta, psi, p, q, r]``.
Parameter vector layout: ``[m, g, d, ixx, iyy, izz, ct, cd]``.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

OK = 0
SINGULAR = 1

_PITCH_LIMIT = math.pi / 2 - 1e-6


@njit
def derivative_into(s, w, prm, out):
    """Write the state derivative into ``out``; return a status code."""
    m, g, d = prm[0], prm[1], prm[2]
    ixx, iyy, izz = prm[3], prm[4], prm[5]
    ct, cd = prm[6], prm[7]

    phi, theta, psi = s[6], s[7], s[8]
    p, q, r = s[9], s[10], s[11]
    if not abs(theta) < _PITCH_LIMIT:
        return SINGULAR

    w1 = w[0] * w[0]
    w2 = w[1] * w[1]
    w3 = w[2] * w[2]
    w4 = w[3] * w[3]
    F = ct * (w1 + w2 + w3 + w4)
    tau_phi = d * ct * (w1 - w2 - w3 + w4)
    tau_theta = d * ct * (w1 + w2 - w3 - w4)
    tau_psi = cd * (w1 - w2 + w3 - w4)

    cf, sf = math.cos(phi), math.sin(phi)
    ct_, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    tt = st / ct_

    out[0] = s[3]
    out[1] = s[4]
    out[2] = s[5]
    fm = F / m
    out[3] = fm * (cp * st * cf + sp * sf)
    out[4] = fm * (sp * st * cf - cp * sf)
    out[5] = fm * (ct_ * cf) - g
    out[6] = p + sf * tt * q + cf * tt * r
    out[7] = cf * q - sf * r
    out[8] = (sf * q + cf * r) / ct_
    out[9] = (iyy - izz) * q * r / ixx + tau_phi / ixx
    out[10] = (izz - ixx) * p * r / iyy + tau_theta / iyy
    out[11] = (ixx - iyy) * p * q / izz + tau_psi / izz
    return OK


@njit
def rk4_into(s, w, dt, prm, out):
    """Classical RK4 step with rotor speeds held over the step."""
    n = s.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    if derivative_into(s, w, prm, k1) != OK:
        return SINGULAR
    for i in range(n):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    if derivative_into(tmp, w, prm, k2) != OK:
        return SINGULAR
    for i in range(n):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    if derivative_into(tmp, w, prm, k3) != OK:
        return SINGULAR
    for i in range(n):
        tmp[i] = s[i] + dt * k3[i]
    if derivative_into(tmp, w, prm, k4) != OK:
        return SINGULAR
    for i in range(n):
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return OK


@njit
def euler_into(s, w, dt, prm, out):
    n = s.shape[0]
    k1 = np.empty(n)
    if derivative_into(s, w, prm, k1) != OK:
        return SINGULAR
    for i in range(n):
        out[i] = s[i] + dt * k1[i]
    return OK


@njit
def rk4_many(s0, w, dt, steps, prm, traj):
    """Integrate ``steps`` RK4 steps at constant speeds; fill ``traj`` rows.

    Returns the number of steps completed.
    """
    n = s0.shape[0]
    for i in range(n):
        traj[0, i] = s0[i]
    cur = s0.copy()
    nxt = np.empty(n)
    for k in range(steps):
        if rk4_into(cur, w, dt, prm, nxt) != OK:
            return k
        for i in range(n):
            traj[k + 1, i] = nxt[i]
            cur[i] = nxt[i]
    return steps


# ---------------------------------------------------------------------------
# Sugeno inference over a batch of (e, e_dot) samples.
#
# mf: (2, n_mf, 3) array of bell parameters (a, b, c) per input.
# coef: (n_mf * n_mf, 3) array of consequents (p, q, r); rule k = i * n_mf + j
# pairs membership i of input 1 with membership j of input 2.


@njit
def _bell_scalar(x, a, b, c):
    z = abs((x - c) / a)
    return 1.0 / (1.0 + z ** (2.0 * b))


@njit
def fis_batch_loop(x1, x2, mf, coef, out, wsum):
    """Loop implementation; fills ``out`` and the unnormalised ``wsum``."""
    n = x1.shape[0]
    n_mf = mf.shape[1]
    mu1 = np.empty(n_mf)
    mu2 = np.empty(n_mf)
    for t in range(n):
        for i in range(n_mf):
            mu1[i] = _bell_scalar(x1[t], mf[0, i, 0], mf[0, i, 1], mf[0, i, 2])
            mu2[i] = _bell_scalar(x2[t], mf[1, i, 0], mf[1, i, 1], mf[1, i, 2])
        num = 0.0
        den = 0.0
        for i in range(n_mf):
            for j in range(n_mf):
                k = i * n_mf + j
                wk = mu1[i] * mu2[j]
                num += wk * (coef[k, 0] * x1[t] + coef[k, 1] * x2[t] + coef[k, 2])
                den += wk
        wsum[t] = den
        out[t] = num / den if den > 0.0 else np.nan


def bell_numpy(x, a, b, c):
    z = np.abs((x - c) / a)
    return 1.0 / (1.0 + z ** (2.0 * b))


def fis_batch_numpy(x1, x2, mf, coef, out, wsum):
    """Vectorised numpy implementation with the same contract as the loop kernel."""
    mu1 = bell_numpy(x1[:, None], mf[0, :, 0], mf[0, :, 1], mf[0, :, 2])
    mu2 = bell_numpy(x2[:, None], mf[1, :, 0], mf[1, :, 1], mf[1, :, 2])
    w = (mu1[:, :, None] * mu2[:, None, :]).reshape(x1.shape[0], -1)
    f = coef[:, 0] * x1[:, None] + coef[:, 1] * x2[:, None] + coef[:, 2]
    den = w.sum(axis=1)
    wsum[:] = den
    with np.errstate(invalid="ignore", divide="ignore"):
        out[:] = np.where(den > 0.0, (w * f).sum(axis=1) / den, np.nan)


fis_batch = fis_batch_loop if USE_NUMBA else fis_batch_numpy
