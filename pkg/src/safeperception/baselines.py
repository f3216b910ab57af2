"""Heuristic yaw policies used as comparison arms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .mathcore import wrap_angle
from .sensing import T_POS, T_SEEN, tracks_to_table

FIXED, LOOK_AHEAD, NEAREST, SAFETY_AWARE = 0, 1, 2, 3
POLICIES = {"fixed": FIXED, "look_ahead": LOOK_AHEAD, "nearest": NEAREST, "safety_aware": SAFETY_AWARE}
POLICY_NAMES = {v: k for k, v in POLICIES.items()}


@dataclass(frozen=True)
class YawPolicy:
    kind: str = "safety_aware"
    fixed_value: float = 0.0

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"policy must be one of {sorted(POLICIES)}, got {self.kind!r}")

    @property
    def code(self) -> int:
        return POLICIES[self.kind]


def fixed_yaw(policy: YawPolicy) -> float:
    return float(wrap_angle(policy.fixed_value))


@jit
def look_ahead_kernel(r, r_d, prev):
    dx = r_d[0] - r[0]
    dy = r_d[1] - r[1]
    if math.sqrt(dx * dx + dy * dy) < 1e-3:
        return prev
    return wrap_angle(math.atan2(dy, dx))


@jit
def nearest_kernel(r, tracks, fallback):
    best = -1
    best_d = np.inf
    for k in range(tracks.shape[0]):
        if tracks[k, T_SEEN] < 0.5:
            continue
        dx = tracks[k, T_POS] - r[0]
        dy = tracks[k, T_POS + 1] - r[1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < best_d:  # strict: equal distances keep the lower id
            best_d = d
            best = k
    if best < 0:
        return fallback
    return wrap_angle(math.atan2(tracks[best, T_POS + 1] - r[1], tracks[best, T_POS] - r[0]))


def look_ahead(uav, ref, prev: float = 0.0) -> float:
    """Bearing from the UAV to the reference point; holds ``prev`` when they coincide."""
    return float(look_ahead_kernel(np.asarray(uav.r, float), np.asarray(ref.r_d, float), float(prev)))


def nearest_obstacle(uav, tracks, ref=None, prev: float = 0.0) -> float:
    """Bearing of the closest tracked obstacle; falls back to look-ahead."""
    table = tracks if isinstance(tracks, np.ndarray) else tracks_to_table(tracks)
    fallback = prev if ref is None else look_ahead(uav, ref, prev)
    return float(nearest_kernel(np.asarray(uav.r, float), table, fallback))
