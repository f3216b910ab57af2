"""Nominal tracking control: LQR position loop and quaternion attitude loop."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .dynamics import G, UavState
from .mathcore import cross, quat_error, quat_from_matrix, sgn


class DegenerateThrust(ValueError):
    """Requested force is too small to define a thrust direction."""


@dataclass(frozen=True)
class PositionReference:
    r_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray


@dataclass(frozen=True)
class LqrGain:
    """Per-axis gains of the decoupled double-integrator regulator.

    ``P`` is the 2x2 Riccati solution shared by all three axes; it doubles as
    the weighting of the tracking Lyapunov function.
    """

    k_p: float
    k_v: float
    P: np.ndarray

    @property
    def K(self) -> np.ndarray:
        """3x6 gain acting on ``[r_d - r; v_d - v]``."""
        return np.hstack([self.k_p * np.eye(3), self.k_v * np.eye(3)])

    def decay_rate(self, q_pos: float, q_vel: float, r: float) -> float:
        """Guaranteed exponential rate of ``e^T P e`` under the LQR law."""
        K = np.array([[self.k_p, self.k_v]])
        Qc = np.diag([q_pos, q_vel]) + r * K.T @ K
        return float(np.linalg.eigvalsh(Qc)[0] / np.linalg.eigvalsh(self.P)[-1])


@dataclass(frozen=True)
class AttitudeGains:
    k_q: float = 2000.0
    k_omega: float = 60.0

    def __post_init__(self):
        if self.k_q <= 0 or self.k_omega <= 0:
            raise ValueError("attitude gains k_q and k_omega must be > 0")


def lqr_synthesize(q_pos_weight: float, q_vel_weight: float, r_weight: float) -> LqrGain:
    """Closed-form continuous Riccati solution for ``x'' = u`` per axis."""
    if q_pos_weight <= 0 or q_vel_weight < 0 or r_weight <= 0:
        raise ValueError("LQR weights must be positive (q_vel may be zero)")
    p12 = math.sqrt(q_pos_weight * r_weight)
    p22 = math.sqrt(r_weight * (2.0 * p12 + q_vel_weight))
    p11 = p12 * p22 / r_weight
    P = np.array([[p11, p12], [p12, p22]])
    return LqrGain(p12 / r_weight, p22 / r_weight, P)


@jit
def position_control_kernel(r, v, r_d, v_d, a_d, k_p, k_v):
    mu = np.empty(3)
    for i in range(3):
        mu[i] = k_p * (r_d[i] - r[i]) + k_v * (v_d[i] - v[i]) + a_d[i]
    return mu


def position_control(s: UavState, ref: PositionReference, K: LqrGain) -> np.ndarray:
    return position_control_kernel(s.r, s.v, ref.r_d, ref.v_d, ref.a_d, K.k_p, K.k_v)


@jit
def force_from_mu_kernel(mu, mass):
    f = np.empty(3)
    f[0] = mass * mu[0]
    f[1] = mass * mu[1]
    f[2] = mass * (mu[2] + G)
    return f


def force_from_mu(mu, m: float) -> np.ndarray:
    if m <= 0:
        raise ValueError("mass must be > 0")
    return force_from_mu_kernel(np.asarray(mu, dtype=float), m)


@jit
def desired_attitude_kernel(f_d, psi_d):
    """Body z along ``f_d``; body x in the vertical plane of heading ``psi_d``.

    Returns ``(q_d, ok)``; ``ok`` is False for a vanishing force.
    """
    n = math.sqrt(f_d[0] ** 2 + f_d[1] ** 2 + f_d[2] ** 2)
    if n < 1e-9:
        return np.array([1.0, 0.0, 0.0, 0.0]), False
    zb = f_d / n
    yc = np.array([-math.sin(psi_d), math.cos(psi_d), 0.0])
    xb = cross(yc, zb)
    xb = xb / math.sqrt(xb[0] ** 2 + xb[1] ** 2 + xb[2] ** 2)
    yb = cross(zb, xb)
    m = np.empty((3, 3))
    for i in range(3):
        m[i, 0] = xb[i]
        m[i, 1] = yb[i]
        m[i, 2] = zb[i]
    return quat_from_matrix(m), True


def compose_desired_attitude(f_d, psi_d: float) -> np.ndarray:
    q, ok = desired_attitude_kernel(np.asarray(f_d, dtype=float), float(psi_d))
    if not ok:
        raise DegenerateThrust("|f_d| below 1e-9; hold the previous attitude reference")
    return q


@jit
def attitude_control_kernel(q, omega, q_d, omega_d, omega_dot_d, k_q, k_omega, J):
    qe = quat_error(q, q_d)
    s = sgn(qe[0])
    nu = np.empty(3)
    for i in range(3):
        nu[i] = k_q * qe[i + 1] * s + k_omega * (omega_d[i] - omega[i]) + omega_dot_d[i]
    Jw = np.empty(3)
    for i in range(3):
        Jw[i] = J[i] * omega[i]
    gyro = cross(omega, Jw)
    tau = np.empty(3)
    for i in range(3):
        tau[i] = J[i] * nu[i] + gyro[i]
    return tau


def attitude_control(s: UavState, q_d, omega_d, omega_dot_d, gains: AttitudeGains, J) -> np.ndarray:
    return attitude_control_kernel(
        s.q, s.omega, np.asarray(q_d, dtype=float), np.asarray(omega_d, dtype=float),
        np.asarray(omega_dot_d, dtype=float), gains.k_q, gains.k_omega, np.asarray(J, dtype=float),
    )
