"""Simulated forward-looking sensor and per-obstacle tracks.

Detection is planar: an obstacle counts as seen only when its whole disc lies
inside the angular field of view and inside the sensing range.  Tracks carry
the last observed kinematics, coast at constant velocity (or hold) while the
obstacle is out of view, and accumulate the time since the last observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import jit
from .mathcore import wrap_angle
from .perception import SensorModel

# track table columns
T_POS = 0
T_VEL = 3
T_TAU = 6
T_H = 7
T_SEEN = 8
T_COLS = 9


@jit
def detect_kernel(r, psi, sigma, rho, r_c, radius):
    dx = r_c[0] - r[0]
    dy = r_c[1] - r[1]
    dist = math.sqrt(dx * dx + dy * dy)
    if dist < radius:
        return True
    if dist > rho - radius:
        return False
    off = abs(wrap_angle(math.atan2(dy, dx) - psi))
    return off + math.asin(radius / dist) <= sigma


def detect(uav, psi: float, sensor: SensorModel, obs) -> bool:
    """``uav`` needs ``.r``; ``obs`` needs ``.r_c`` and ``.radius_true``."""
    return bool(detect_kernel(np.asarray(uav.r, float), float(psi), sensor.sigma, sensor.rho,
                              np.asarray(obs.r_c, float), float(obs.radius_true)))


@jit
def update_tracks_kernel(tracks, detected, truth_pos, truth_vel, dt, coast):
    """Advance every track row in place by one step of length ``dt``."""
    for k in range(tracks.shape[0]):
        if detected[k]:
            for i in range(3):
                tracks[k, T_POS + i] = truth_pos[k, i]
                tracks[k, T_VEL + i] = truth_vel[k, i]
            tracks[k, T_TAU] = 0.0
            tracks[k, T_SEEN] = 1.0
        elif tracks[k, T_SEEN] > 0.5:
            if coast:
                for i in range(3):
                    tracks[k, T_POS + i] += dt * tracks[k, T_VEL + i]
            tracks[k, T_TAU] += dt


@dataclass
class ObstacleTrack:
    id: int
    last_seen_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    last_seen_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_k: float = 0.0
    h_k: float = math.inf
    ever_seen: bool = False


def tracks_to_table(tracks) -> np.ndarray:
    table = np.zeros((len(tracks), T_COLS))
    for k, t in enumerate(tracks):
        table[k, T_POS:T_POS + 3] = t.last_seen_position
        table[k, T_VEL:T_VEL + 3] = t.last_seen_velocity
        table[k, T_TAU] = t.tau_k
        table[k, T_H] = t.h_k
        table[k, T_SEEN] = float(t.ever_seen)
    return table


def tracks_from_table(table) -> list:
    return [
        ObstacleTrack(k, row[T_POS:T_POS + 3].copy(), row[T_VEL:T_VEL + 3].copy(), float(row[T_TAU]),
                      float(row[T_H]), bool(row[T_SEEN] > 0.5))
        for k, row in enumerate(table)
    ]


def update_tracks(tracks, detections, truth_states, dt: float, coast: bool = True, h_values=None) -> list:
    """Return updated copies; never-seen, undetected obstacles stay without a track.

    ``h_values`` (optional, one per obstacle) refreshes ``h_k`` for tracked
    obstacles; the flight loop recomputes it from the current estimate.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    table = tracks_to_table(tracks)
    pos = np.array([s.r_c for s in truth_states], dtype=float).reshape(-1, 3)
    vel = np.array([s.v_c for s in truth_states], dtype=float).reshape(-1, 3)
    update_tracks_kernel(table, np.asarray(detections, dtype=np.bool_), pos, vel, float(dt), bool(coast))
    out = tracks_from_table(table)
    for k, t in enumerate(out):
        t.id = tracks[k].id
        if h_values is not None and t.ever_seen:
            t.h_k = float(h_values[k])
    return out
