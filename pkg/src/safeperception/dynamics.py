"""Quadrotor rigid-body and obstacle kinematics.

The UAV state is carried in kernels as a flat 13-vector
``[r(3), v(3), q(4), omega(3)]`` with ``omega`` in the body frame.
Obstacle trajectories are packed one per row of a float table so the flight
kernel can evaluate every obstacle without Python objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import jit
from .mathcore import IDENTITY_QUAT, body_z, cross

G = 9.81

STATIC, LINEAR, SINUSOIDAL = 0, 1, 2
KINDS = {"static": STATIC, "linear": LINEAR, "sinusoidal": SINUSOIDAL}

# obstacle table columns
C_KIND = 0
C_ANCHOR = 1
C_VEL = 4
C_AMP = 7
C_OMEGA = 10
C_PHASE = 11
C_LO = 12
C_HI = 15
C_BOUNDED = 18
C_RADIUS = 19
C_BARRIER = 20
N_COLS = 21


class NumericalBlowUp(FloatingPointError):
    """Integration produced a non-finite state."""


@dataclass
class UavParams:
    mass: float = 0.033
    inertia: tuple[float, float, float] = (1.66e-5, 1.66e-5, 2.93e-5)
    mu_min: tuple[float, float, float] = (-5.0, -5.0, -5.0)
    mu_max: tuple[float, float, float] = (5.0, 5.0, 5.0)
    uav_radius: float = 0.06

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("uav.mass must be > 0")
        if len(self.inertia) != 3 or min(self.inertia) <= 0:
            raise ValueError("uav.inertia must be three positive diagonal entries")
        if any(lo >= hi for lo, hi in zip(self.mu_min, self.mu_max)):
            raise ValueError("uav.mu_min must be < uav.mu_max componentwise")
        if self.uav_radius < 0:
            raise ValueError("uav.uav_radius must be >= 0")

    @property
    def J(self) -> np.ndarray:
        return np.asarray(self.inertia, dtype=float)


@dataclass
class UavState:
    r: np.ndarray
    v: np.ndarray
    q: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.r, self.v, self.q, self.omega]).astype(float)

    @classmethod
    def from_array(cls, x) -> "UavState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:10].copy(), x[10:13].copy())


@jit
def _deriv(x, thrust, tau, mass, J):
    d = np.empty(13)
    q = x[6:10]
    w = x[10:13]
    zb = body_z(q)
    a = thrust / mass
    d[0] = x[3]
    d[1] = x[4]
    d[2] = x[5]
    d[3] = a * zb[0]
    d[4] = a * zb[1]
    d[5] = a * zb[2] - G
    # q_dot = 0.5 * q (x) (0, w)
    d[6] = -0.5 * (q[1] * w[0] + q[2] * w[1] + q[3] * w[2])
    d[7] = 0.5 * (q[0] * w[0] + q[2] * w[2] - q[3] * w[1])
    d[8] = 0.5 * (q[0] * w[1] + q[3] * w[0] - q[1] * w[2])
    d[9] = 0.5 * (q[0] * w[2] + q[1] * w[1] - q[2] * w[0])
    Jw = np.empty(3)
    for i in range(3):
        Jw[i] = J[i] * w[i]
    gyro = cross(w, Jw)
    for i in range(3):
        d[10 + i] = (tau[i] - gyro[i]) / J[i]
    return d


@jit
def step_uav_kernel(x, thrust, tau, mass, J, dt):
    """One RK4 step with thrust and torque held constant; q renormalised."""
    k1 = _deriv(x, thrust, tau, mass, J)
    k2 = _deriv(x + 0.5 * dt * k1, thrust, tau, mass, J)
    k3 = _deriv(x + 0.5 * dt * k2, thrust, tau, mass, J)
    k4 = _deriv(x + dt * k3, thrust, tau, mass, J)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    n = math.sqrt(out[6] ** 2 + out[7] ** 2 + out[8] ** 2 + out[9] ** 2)
    for i in range(6, 10):
        out[i] /= n
    return out


def step_uav(s: UavState, p: UavParams, thrust: float, torque, dt: float) -> UavState:
    if not 0 < dt <= 0.01:
        raise ValueError("dt must lie in (0, 0.01]")
    if thrust < 0:
        raise ValueError("thrust must be >= 0")
    x = step_uav_kernel(s.as_array(), float(thrust), np.asarray(torque, dtype=float), p.mass, p.J, dt)
    if not np.all(np.isfinite(x)):
        raise NumericalBlowUp("non-finite UAV state after integration step")
    return UavState.from_array(x)


@dataclass
class ObstacleTrajectory:
    """Analytic obstacle path ``anchor + velocity*t + amplitude*sin(omega*t + phase)``.

    ``kind`` selects which terms are live.  With ``bounds`` set, each axis
    folds back and forth inside ``[lo, hi]`` (specular reflection).
    """

    kind: str = "static"
    anchor: tuple = (0.0, 0.0, 0.0)
    velocity: tuple = (0.0, 0.0, 0.0)
    amplitude: tuple = (0.0, 0.0, 0.0)
    omega: float = 0.0
    phase: float = 0.0
    bounds: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown obstacle kind {self.kind!r}")

    def to_row(self, radius_true: float, barrier_radius: float) -> np.ndarray:
        row = np.zeros(N_COLS)
        row[C_KIND] = KINDS[self.kind]
        row[C_ANCHOR:C_ANCHOR + 3] = self.anchor
        row[C_VEL:C_VEL + 3] = self.velocity
        row[C_AMP:C_AMP + 3] = self.amplitude
        row[C_OMEGA] = self.omega
        row[C_PHASE] = self.phase
        if self.bounds is not None:
            lo, hi = self.bounds
            row[C_LO:C_LO + 3] = lo
            row[C_HI:C_HI + 3] = hi
            row[C_BOUNDED] = 1.0
        row[C_RADIUS] = radius_true
        row[C_BARRIER] = barrier_radius
        return row


@dataclass
class ObstacleState:
    r_c: np.ndarray
    v_c: np.ndarray
    radius_true: float
    R: float
    a_c: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.radius_true <= 0:
            raise ValueError("radius_true must be > 0")
        if self.R < self.radius_true:
            raise ValueError("barrier radius R must be >= radius_true")


@jit
def _fold(x, lo, hi):
    span = hi - lo
    if span <= 0.0:
        return lo, 0.0
    y = (x - lo) % (2.0 * span)
    if y <= span:
        return lo + y, 1.0
    return lo + 2.0 * span - y, -1.0


@jit
def obstacle_kinematics(row, t, pos, vel, acc):
    """Fill position, velocity and acceleration of one table row at time ``t``."""
    kind = int(row[C_KIND])
    for i in range(3):
        p = row[C_ANCHOR + i]
        v = 0.0
        a = 0.0
        if kind != STATIC:
            p += row[C_VEL + i] * t
            v = row[C_VEL + i]
        if kind == SINUSOIDAL:
            arg = row[C_OMEGA] * t + row[C_PHASE]
            amp = row[C_AMP + i]
            w = row[C_OMEGA]
            p += amp * math.sin(arg)
            v += amp * w * math.cos(arg)
            a = -amp * w * w * math.sin(arg)
        if row[C_BOUNDED] > 0.5:
            p, s = _fold(p, row[C_LO + i], row[C_HI + i])
            v *= s
            a *= s
        pos[i] = p
        vel[i] = v
        acc[i] = a


def obstacle_state_at(traj: ObstacleTrajectory, radius_true: float, R: float, t: float) -> ObstacleState:
    if t < 0:
        raise ValueError("t must be >= 0")
    row = traj.to_row(radius_true, R)
    pos, vel, acc = np.empty(3), np.empty(3), np.empty(3)
    obstacle_kinematics(row, float(t), pos, vel, acc)
    return ObstacleState(pos, vel, radius_true, R, acc)


def hover_thrust(p: UavParams) -> float:
    return p.mass * G
