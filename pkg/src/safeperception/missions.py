"""Mission profiles, reference paths, and randomized obstacle generation."""

from __future__ import annotations

import math

import numpy as np

from ._jit import jit
from .config import Config, CorridorProfile, InfinityProfile, ObstacleConfig, SafetyConfig
from .dynamics import ObstacleTrajectory, obstacle_state_at
from .tracking import PositionReference

INFINITY, CORRIDOR = 0, 1
PROFILES = {"infinity": INFINITY, "corridor": CORRIDOR}

# mission vector layout
M_KIND, M_DURATION, M_CX, M_CY, M_CZ, M_AX, M_AY, M_PERIOD, M_SPEED = range(9)
M_LEN = 9


class GenerationFault(RuntimeError):
    """Obstacles could not be placed without an initial violation."""


def profile_of(cfg: Config, name: str):
    if name == "infinity":
        return cfg.infinity
    if name == "corridor":
        return cfg.corridor
    raise ValueError(f"unknown profile {name!r} (expected infinity or corridor)")


def mission_vector(profile) -> np.ndarray:
    m = np.zeros(M_LEN)
    m[M_DURATION] = profile.duration
    m[M_PERIOD] = profile.period
    if isinstance(profile, InfinityProfile):
        m[M_KIND] = INFINITY
        m[M_CX:M_CZ + 1] = profile.center
        m[M_AX] = profile.extent_x / 2.0
        m[M_AY] = profile.extent_y
    else:
        m[M_KIND] = CORRIDOR
        m[M_CX] = 0.0
        m[M_CY] = 0.0
        m[M_CZ] = profile.altitude
        m[M_AY] = profile.amplitude
        m[M_SPEED] = profile.speed
    return m


@jit
def reference_kernel(m, t, r_d, v_d, a_d):
    """Fill the reference position and its first two derivatives at ``t``.

    Outside ``[0, duration]`` the reference holds the nearest endpoint with
    zero derivatives.
    """
    frozen = False
    if t < 0.0:
        t = 0.0
        frozen = True
    elif t > m[M_DURATION]:
        t = m[M_DURATION]
        frozen = True
    w = 2.0 * math.pi / m[M_PERIOD]
    if int(m[M_KIND]) == INFINITY:
        s1 = math.sin(w * t)
        c1 = math.cos(w * t)
        s2 = math.sin(2.0 * w * t)
        c2 = math.cos(2.0 * w * t)
        A = m[M_AX]
        B = m[M_AY]
        r_d[0] = m[M_CX] + A * s1
        r_d[1] = m[M_CY] + 0.5 * B * s2
        r_d[2] = m[M_CZ]
        v_d[0] = A * w * c1
        v_d[1] = B * w * c2
        v_d[2] = 0.0
        a_d[0] = -A * w * w * s1
        a_d[1] = -2.0 * B * w * w * s2
        a_d[2] = 0.0
    else:
        A = m[M_AY]
        s1 = math.sin(w * t)
        c1 = math.cos(w * t)
        r_d[0] = m[M_CX] + m[M_SPEED] * t
        r_d[1] = m[M_CY] + A * s1
        r_d[2] = m[M_CZ]
        v_d[0] = m[M_SPEED]
        v_d[1] = A * w * c1
        v_d[2] = 0.0
        a_d[0] = 0.0
        a_d[1] = -A * w * w * s1
        a_d[2] = 0.0
    if frozen:
        for i in range(3):
            v_d[i] = 0.0
            a_d[i] = 0.0


def reference_at(profile, t: float) -> PositionReference:
    r, v, a = np.empty(3), np.empty(3), np.empty(3)
    reference_kernel(mission_vector(profile), float(t), r, v, a)
    return PositionReference(r, v, a)


def _kind(rng, oc: ObstacleConfig) -> str:
    w = np.array([oc.weight_static, oc.weight_linear, oc.weight_sinusoidal], dtype=float)
    return ("static", "linear", "sinusoidal")[rng.choice(3, p=w / w.sum())]


def _with_wobble(rng, oc: ObstacleConfig, direction, t_star: float):
    """Lateral sinusoid perpendicular to ``direction`` that vanishes at ``t_star``."""
    amp = rng.uniform(0.0, oc.sin_amplitude_max)
    omega = rng.uniform(oc.sin_omega_min, oc.sin_omega_max)
    perp = np.array([-direction[1], direction[0], 0.0])
    return tuple(amp * perp), omega, -omega * t_star


def _infinity_obstacle(profile: InfinityProfile, oc: ObstacleConfig, rng):
    """Obstacle aimed to cross the reference path at a random time."""
    kind = _kind(rng, oc)
    t_star = rng.uniform(oc.intercept_start, oc.intercept_end) * profile.duration
    ref = reference_at(profile, t_star)
    off_ang = rng.uniform(-math.pi, math.pi)
    off = rng.uniform(0.0, oc.intercept_offset_max)
    target = ref.r_d + off * np.array([math.cos(off_ang), math.sin(off_ang), 0.0])
    if kind == "static":
        return ObstacleTrajectory("static", tuple(target))
    heading = rng.uniform(-math.pi, math.pi)
    speed = rng.uniform(oc.speed_min, oc.speed_max)
    direction = np.array([math.cos(heading), math.sin(heading), 0.0])
    vel = speed * direction
    anchor = target - vel * t_star
    if kind == "linear":
        return ObstacleTrajectory("linear", tuple(anchor), tuple(vel))
    amp, omega, phase = _with_wobble(rng, oc, direction, t_star)
    return ObstacleTrajectory("sinusoidal", tuple(anchor), tuple(vel), amp, omega, phase)


def _corridor_obstacle(profile: CorridorProfile, oc: ObstacleConfig, rng, radius: float):
    """Obstacle wandering inside the corridor with reflective walls."""
    kind = _kind(rng, oc)
    lo = (0.0, -profile.width / 2.0 + radius, profile.altitude)
    hi = (profile.length, profile.width / 2.0 - radius, profile.altitude)
    anchor = np.array([rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), profile.altitude])
    if kind == "static":
        return ObstacleTrajectory("static", tuple(anchor))
    heading = rng.uniform(-math.pi, math.pi)
    speed = rng.uniform(oc.speed_min, oc.speed_max)
    direction = np.array([math.cos(heading), math.sin(heading), 0.0])
    vel = tuple(speed * direction)
    if kind == "linear":
        return ObstacleTrajectory("linear", tuple(anchor), vel, bounds=(lo, hi))
    amp, omega, phase = _with_wobble(rng, oc, direction, 0.0)
    return ObstacleTrajectory("sinusoidal", tuple(anchor), vel, amp, omega, phase, bounds=(lo, hi))


def generate_obstacles(profile, safety: SafetyConfig, uav_radius: float, rng, oc: ObstacleConfig | None = None):
    """Sample ``profile.obstacle_count`` trajectories.

    Returns a list of ``(ObstacleTrajectory, radius_true, R)`` with
    ``R = safety_factor * (radius_true + uav_radius)``.  Every obstacle starts
    at least ``max(R, min_start_clearance)`` from the UAV start point.
    """
    oc = oc or ObstacleConfig()
    radius = safety.obstacle_radius_true
    R = safety.barrier_radius(uav_radius)
    start = reference_at(profile, 0.0).r_d
    clearance = max(R, oc.min_start_clearance)
    out = []
    for _ in range(profile.obstacle_count):
        for _attempt in range(oc.max_attempts):
            if isinstance(profile, InfinityProfile):
                traj = _infinity_obstacle(profile, oc, rng)
            else:
                traj = _corridor_obstacle(profile, oc, rng, radius)
            r0 = obstacle_state_at(traj, radius, R, 0.0).r_c
            if np.linalg.norm(r0 - start) >= clearance:
                out.append((traj, radius, R))
                break
        else:
            raise GenerationFault(f"could not place obstacle {len(out)} after {oc.max_attempts} attempts")
    return out
