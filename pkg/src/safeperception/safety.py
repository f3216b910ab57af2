"""Exponential CBF rows, the tracking CLF row, and the CLF-CBF-QP filter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import jit
from .dynamics import ObstacleState, UavState
from .qp import INFEASIBLE, MAX_ITER, OPTIMAL, solve_diag_qp
from .tracking import PositionReference


class SingularGeometry(ValueError):
    """UAV and obstacle centres coincide; the barrier gradient is undefined."""


@dataclass(frozen=True)
class CbfParams:
    zeta: float = 1.0
    omega_n: float = 2.5
    robust_margin: float = 0.15  # m/s^2, bound on |realised accel - mu| along the barrier normal

    def __post_init__(self):
        if not self.zeta >= 1.0:
            raise ValueError(f"cbf.zeta = {self.zeta} violates zeta >= 1 (roots must stay negative real)")
        if not self.omega_n > 0.0:
            raise ValueError(f"cbf.omega_n = {self.omega_n} violates omega_n > 0")
        if not self.robust_margin >= 0.0:
            raise ValueError(f"cbf.robust_margin = {self.robust_margin} must be >= 0")


@dataclass(frozen=True)
class CbfRow:
    A: np.ndarray
    b: float
    h_value: float


@dataclass(frozen=True)
class ClfRow:
    A: np.ndarray
    b: float


@dataclass
class QpProblem:
    mu_d: np.ndarray
    H: np.ndarray = field(default_factory=lambda: np.ones(3))  # diagonal of H_qp
    xi: float = 1.0
    cbf: list = field(default_factory=list)  # CbfRow or (A, b)
    clf: ClfRow | None = None
    mu_min: np.ndarray | None = None
    mu_max: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float).reshape(3)
        if np.any(self.H <= 0):
            raise ValueError("H_qp diagonal entries must be > 0")
        if not self.xi > 0:
            raise ValueError("xi must be > 0")


@dataclass(frozen=True)
class QpResult:
    mu: np.ndarray
    delta: float
    status: int
    multipliers: np.ndarray


@jit
def barrier_value(r, r_c, R):
    d0 = r_c[0] - r[0]
    d1 = r_c[1] - r[1]
    d2 = r_c[2] - r[2]
    return math.sqrt(d0 * d0 + d1 * d1 + d2 * d2) - R


@jit
def cbf_row_kernel(r, v, r_c, v_c, a_c, R, zeta, omega_n, out):
    """Write ``[A(3), b]`` of ``A mu <= b`` into ``out``; return ``ok``.

    ``h(mu) = b - A mu`` with ``h = B'' + 2 zeta omega_n B' + omega_n^2 B`` and the
    UAV acceleration equal to ``mu``.
    """
    d = np.empty(3)
    dd = np.empty(3)
    for i in range(3):
        d[i] = r_c[i] - r[i]
        dd[i] = v_c[i] - v[i]
    dist = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if dist < 1e-9:
        return False
    n0 = d[0] / dist
    n1 = d[1] / dist
    n2 = d[2] / dist
    B = dist - R
    Bdot = n0 * dd[0] + n1 * dd[1] + n2 * dd[2]
    vv = dd[0] * dd[0] + dd[1] * dd[1] + dd[2] * dd[2]
    # B'' = n . (a_c - mu) + (|dd|^2 - Bdot^2) / dist
    free = n0 * a_c[0] + n1 * a_c[1] + n2 * a_c[2] + (vv - Bdot * Bdot) / dist
    out[0] = n0
    out[1] = n1
    out[2] = n2
    out[3] = free + 2.0 * zeta * omega_n * Bdot + omega_n * omega_n * B
    return True


def cbf_row(uav: UavState, mu_probe, obs: ObstacleState, obs_accel, p: CbfParams) -> CbfRow:
    out = np.empty(4)
    ok = cbf_row_kernel(uav.r, uav.v, obs.r_c, obs.v_c, np.asarray(obs_accel, float),
                        obs.R, p.zeta, p.omega_n, out)
    if not ok:
        raise SingularGeometry("UAV and obstacle centres coincide")
    A = out[:3].copy()
    b = float(out[3])
    return CbfRow(A, b, b - float(A @ np.asarray(mu_probe, float)))


@jit
def clf_row_kernel(r, v, r_d, v_d, a_d, rate, p11, p12, p22, out):
    """Row enforcing ``dV/dt <= -rate V`` for ``V = 1/2 sum e^T P e`` per axis."""
    V = 0.0
    b = 0.0
    for i in range(3):
        ep = r_d[i] - r[i]
        ev = v_d[i] - v[i]
        V += 0.5 * (p11 * ep * ep + 2.0 * p12 * ep * ev + p22 * ev * ev)
        w = p12 * ep + p22 * ev
        # dV/dt = (p11 ep + p12 ev) ev + w (a_d - mu)
        out[i] = -w
        b -= (p11 * ep + p12 * ev) * ev + w * a_d[i]
    out[3] = b - rate * V


def clf_row(uav: UavState, ref: PositionReference, clf_rate: float, P=None) -> ClfRow:
    """CLF row; ``P`` is the per-axis 2x2 weighting (identity by default)."""
    if not clf_rate > 0:
        raise ValueError("clf_rate must be > 0")
    P = np.eye(2) if P is None else np.asarray(P, float)
    out = np.empty(4)
    clf_row_kernel(uav.r, uav.v, ref.r_d, ref.v_d, ref.a_d, clf_rate, P[0, 0], P[0, 1], P[1, 1], out)
    return ClfRow(out[:3].copy(), float(out[3]))


@jit
def filter_kernel(mu_d, Hd, xi, rows, n_rows, clf, use_clf, mu_min, mu_max, relax_weight, lam):
    """Solve the CLF-CBF-QP; returns ``(mu, delta, status)``.

    ``rows`` holds CBF rows ``[A(3), b]``.  When the hard constraints conflict,
    a single shared slack on the CBF rows (weight ``relax_weight``) yields the
    least-violating point inside the box and the status is INFEASIBLE.
    ``lam`` (length >= n_rows + 8) receives the multipliers of the hard solve.
    """
    m = n_rows + 8
    G = np.zeros((m, 5))
    h = np.zeros(m)
    k = 0
    for j in range(n_rows):
        s = 0.0
        for i in range(3):
            G[k, i] = rows[j, i]
            s += rows[j, i] * mu_d[i]
        h[k] = rows[j, 3] - s
        k += 1
    if use_clf:
        s = 0.0
        for i in range(3):
            G[k, i] = clf[i]
            s += clf[i] * mu_d[i]
        G[k, 3] = -1.0
        h[k] = clf[3] - s
        k += 1
    for i in range(3):
        G[k, i] = 1.0
        h[k] = mu_max[i] - mu_d[i]
        k += 1
        G[k, i] = -1.0
        h[k] = mu_d[i] - mu_min[i]
        k += 1
    G[k, 3] = -1.0
    k += 1

    d = np.empty(4)
    d[0] = Hd[0]
    d[1] = Hd[1]
    d[2] = Hd[2]
    d[3] = xi
    x, status = solve_diag_qp(d, G[:k, :4], h, k, lam)
    if status != 0:
        # relaxed problem: CBF rows get a shared slack column, s >= 0
        for j in range(n_rows):
            G[j, 4] = -1.0
        G[k, 4] = -1.0
        k += 1
        d5 = np.empty(5)
        for i in range(4):
            d5[i] = d[i]
        d5[4] = relax_weight
        lam5 = np.zeros(m)
        x5, st5 = solve_diag_qp(d5, G[:k], h, k, lam5)
        x = x5[:4]
        status = 1
        if st5 != 0:
            status = 2
    mu = np.empty(3)
    for i in range(3):
        mu[i] = min(max(mu_d[i] + x[i], mu_min[i]), mu_max[i])
    return mu, max(x[3], 0.0), status


def solve_qp(p: QpProblem, relax_weight: float = 1e6) -> QpResult:
    """Minimally invasive filter of ``p.mu_d``.

    Returns the filtered acceleration, the CLF slack and a status
    (``OPTIMAL``, ``INFEASIBLE`` or ``MAX_ITER``).  Multipliers are ordered as
    CBF rows, CLF row (if any), box rows (upper/lower per axis), then
    ``delta >= 0``; they are only reported for OPTIMAL solves.
    """
    rows = np.zeros((max(len(p.cbf), 1), 4))
    for j, row in enumerate(p.cbf):
        A, b = (row.A, row.b) if isinstance(row, CbfRow) else row
        rows[j, :3] = A
        rows[j, 3] = b
    clf = np.zeros(4)
    if p.clf is not None:
        clf[:3] = p.clf.A
        clf[3] = p.clf.b
    big = 1e12
    mu_min = np.full(3, -big) if p.mu_min is None else np.asarray(p.mu_min, float)
    mu_max = np.full(3, big) if p.mu_max is None else np.asarray(p.mu_max, float)
    mu_d = np.asarray(p.mu_d, float)
    lam = np.zeros(len(p.cbf) + 8)
    mu, delta, status = filter_kernel(mu_d, p.H, p.xi, rows, len(p.cbf), clf, p.clf is not None,
                                      mu_min, mu_max, relax_weight, lam)
    n = len(p.cbf) + (p.clf is not None) + 7
    lam = lam[:n] if status == OPTIMAL else np.full(n, np.nan)
    return QpResult(mu, float(delta), int(status), lam)


def problem_matrices(p: QpProblem):
    """Dense ``(G, h)`` over ``x = [mu_qp, delta]`` as used by the filter."""
    rows, rhs = [], []
    for row in p.cbf:
        A, b = (row.A, row.b) if isinstance(row, CbfRow) else row
        A = np.asarray(A, float)
        rows.append(np.r_[A, 0.0])
        rhs.append(b - A @ p.mu_d)
    if p.clf is not None:
        rows.append(np.r_[p.clf.A, -1.0])
        rhs.append(p.clf.b - p.clf.A @ p.mu_d)
    for i in range(3):
        e = np.zeros(4)
        e[i] = 1.0
        hi = 1e12 if p.mu_max is None else p.mu_max[i] - p.mu_d[i]
        lo = 1e12 if p.mu_min is None else p.mu_d[i] - p.mu_min[i]
        rows.append(e)
        rhs.append(hi)
        rows.append(-e)
        rhs.append(lo)
    rows.append(np.array([0.0, 0.0, 0.0, -1.0]))
    rhs.append(0.0)
    return np.array(rows), np.array(rhs, dtype=float)


__all__ = [
    "CbfParams", "CbfRow", "ClfRow", "QpProblem", "QpResult", "barrier_value", "cbf_row",
    "clf_row", "solve_qp", "problem_matrices", "OPTIMAL", "INFEASIBLE", "MAX_ITER",
]
