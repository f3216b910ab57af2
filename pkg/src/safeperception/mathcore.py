"""Vector, quaternion and angle helpers plus the seeded random source.

Quaternions are Hamilton, scalar-first ``[w, x, y, z]`` and rotate body
vectors into the world frame.  Angles wrap to the half-open ``[-pi, pi)``.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import jit

TWO_PI = 2.0 * math.pi

GRAVITY = np.array([0.0, 0.0, -9.81])


@jit
def wrap_angle(a):
    return (a + math.pi) % TWO_PI - math.pi


@jit
def quat_mul(a, b):
    """Hamilton product ``a (x) b``, renormalised."""
    aw, ax, ay, az = a[0], a[1], a[2], a[3]
    bw, bx, by, bz = b[0], b[1], b[2], b[3]
    out = np.empty(4)
    out[0] = aw * bw - ax * bx - ay * by - az * bz
    out[1] = aw * bx + ax * bw + ay * bz - az * by
    out[2] = aw * by - ax * bz + ay * bw + az * bx
    out[3] = aw * bz + ax * by - ay * bx + az * bw
    n = math.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
    for i in range(4):
        out[i] /= n
    return out


@jit
def quat_conj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@jit
def quat_error(q, q_d):
    """Desired attitude relative to the current one, ``q^-1 (x) q_d``."""
    return quat_mul(quat_conj(q), q_d)


@jit
def quat_normalize(q):
    n = math.sqrt(q[0] ** 2 + q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
    out = np.empty(4)
    for i in range(4):
        out[i] = q[i] / n
    return out


@jit
def quat_rotate(q, v):
    """Rotate body vector ``v`` into the world frame."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    out = np.empty(3)
    out[0] = (1 - 2 * (y * y + z * z)) * v[0] + 2 * (x * y - w * z) * v[1] + 2 * (x * z + w * y) * v[2]
    out[1] = 2 * (x * y + w * z) * v[0] + (1 - 2 * (x * x + z * z)) * v[1] + 2 * (y * z - w * x) * v[2]
    out[2] = 2 * (x * z - w * y) * v[0] + 2 * (y * z + w * x) * v[1] + (1 - 2 * (x * x + y * y)) * v[2]
    return out


@jit
def body_z(q):
    """Third column of the rotation matrix (thrust axis in world frame)."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    out = np.empty(3)
    out[0] = 2 * (x * z + w * y)
    out[1] = 2 * (y * z - w * x)
    out[2] = 1 - 2 * (x * x + y * y)
    return out


@jit
def quat_yaw(q):
    """Heading of the body x axis projected on the horizontal plane."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    return math.atan2(2 * (x * y + w * z), 1 - 2 * (y * y + z * z))


@jit
def quat_from_yaw(psi):
    out = np.zeros(4)
    out[0] = math.cos(0.5 * psi)
    out[3] = math.sin(0.5 * psi)
    return out


@jit
def quat_from_matrix(m):
    """Shepperd's method; returns the hemisphere with ``w >= 0``."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    q = np.empty(4)
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q[0] = 0.25 * s
        q[1] = (m[2, 1] - m[1, 2]) / s
        q[2] = (m[0, 2] - m[2, 0]) / s
        q[3] = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q[0] = (m[2, 1] - m[1, 2]) / s
        q[1] = 0.25 * s
        q[2] = (m[0, 1] + m[1, 0]) / s
        q[3] = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q[0] = (m[0, 2] - m[2, 0]) / s
        q[1] = (m[0, 1] + m[1, 0]) / s
        q[2] = 0.25 * s
        q[3] = (m[1, 2] + m[2, 1]) / s
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q[0] = (m[1, 0] - m[0, 1]) / s
        q[1] = (m[0, 2] + m[2, 0]) / s
        q[2] = (m[1, 2] + m[2, 1]) / s
        q[3] = 0.25 * s
    if q[0] < 0.0:
        for i in range(4):
            q[i] = -q[i]
    return quat_normalize(q)


@jit
def cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@jit
def norm3(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@jit
def sgn(x):
    """Sign with ``sgn(0) = +1``."""
    return 1.0 if x >= 0.0 else -1.0


IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


class Rng:
    """Seeded random source backed by the PCG64 bit generator.

    Two instances built from the same seed produce identical draws on every
    platform.  ``spawn`` derives independent child streams from the seed.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, index: int) -> "Rng":
        return Rng(self.seed, self.key + (int(index),))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def random(self, size=None):
        return self._gen.random(size)

    def choice(self, n: int, p=None):
        return int(self._gen.choice(n, p=p))

    def unit_quaternion(self) -> np.ndarray:
        q = self._gen.normal(size=4)
        return q / np.linalg.norm(q)
