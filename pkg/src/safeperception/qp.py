"""Dense dual active-set QP solver for small problems with diagonal cost.

Solves ``min 1/2 sum_i d_i x_i^2  s.t.  G x <= h`` using the Goldfarb-Idnani
scheme: start from the unconstrained minimiser ``x = 0`` and repeatedly add
the most violated constraint, dropping active constraints whose multiplier
would turn negative.  Works in the scaled variable ``y = sqrt(d) x`` so the
Hessian is the identity.  Intended for a handful of variables and a few
dozen rows.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import jit

OPTIMAL = 0
INFEASIBLE = 1
MAX_ITER = 2


@jit
def _chol_solve(M, rhs, q):
    """Solve the leading ``q x q`` SPD block of ``M`` against ``rhs``."""
    L = np.zeros((q, q))
    for i in range(q):
        for j in range(i + 1):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = math.sqrt(max(s, 1e-300))
            else:
                L[i, j] = s / L[j, j]
    z = np.empty(q)
    for i in range(q):
        s = rhs[i]
        for k in range(i):
            s -= L[i, k] * z[k]
        z[i] = s / L[i, i]
    x = np.empty(q)
    for i in range(q - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, q):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


@jit
def solve_diag_qp(d, G, h, m, lam):
    """Minimise ``1/2 x^T diag(d) x`` subject to the first ``m`` rows of ``G x <= h``.

    ``lam`` (length >= m) receives the multipliers.  Returns ``(x, status)``.
    """
    n = d.shape[0]
    sq = np.sqrt(d)
    # constraints in GI form: nvec_j . y >= b_j  with nvec_j = -G_j / sq
    N = np.empty((m, n))
    b = np.empty(m)
    nn = np.empty(m)
    for j in range(m):
        s = 0.0
        for i in range(n):
            N[j, i] = -G[j, i] / sq[i]
            s += N[j, i] * N[j, i]
        b[j] = -h[j]
        nn[j] = math.sqrt(s)
    for j in range(m):
        lam[j] = 0.0

    y = np.zeros(n)
    active = np.empty(n + 1, dtype=np.int64)
    u = np.zeros(n + 1)
    q = 0
    status = OPTIMAL
    max_iter = 10 * (m + n) + 50
    it = 0
    while True:
        # most violated constraint, normalised by row norm
        p = -1
        worst = 0.0
        for j in range(m):
            if nn[j] == 0.0:
                continue
            skip = False
            for a in range(q):
                if active[a] == j:
                    skip = True
            if skip:
                continue
            s = 0.0
            for i in range(n):
                s += N[j, i] * y[i]
            viol = (s - b[j]) / nn[j]
            if viol < worst - 1e-13 * (1.0 + abs(b[j]) / nn[j]):
                worst = viol
                p = j
        if p < 0:
            break
        up = 0.0
        while True:
            it += 1
            if it > max_iter:
                status = MAX_ITER
                break
            np_vec = N[p]
            r = np.zeros(q)
            z = np_vec.copy()
            if q > 0:
                M = np.empty((q, q))
                rhs = np.empty(q)
                for a in range(q):
                    ja = active[a]
                    s = 0.0
                    for i in range(n):
                        s += N[ja, i] * np_vec[i]
                    rhs[a] = s
                    for c in range(a + 1):
                        jc = active[c]
                        s2 = 0.0
                        for i in range(n):
                            s2 += N[ja, i] * N[jc, i]
                        M[a, c] = s2
                        M[c, a] = s2
                r = _chol_solve(M, rhs, q)
                for a in range(q):
                    ja = active[a]
                    for i in range(n):
                        z[i] -= N[ja, i] * r[a]
            zz = 0.0
            for i in range(n):
                zz += z[i] * z[i]
            # dual (partial) step length
            t1 = np.inf
            drop = -1
            for a in range(q):
                if r[a] > 1e-14:
                    ratio = u[a] / r[a]
                    if ratio < t1:
                        t1 = ratio
                        drop = a
            sp = 0.0
            for i in range(n):
                sp += np_vec[i] * y[i]
            sp -= b[p]
            t2 = np.inf
            if zz > 1e-20 * nn[p] * nn[p]:
                t2 = -sp / zz
            t = min(t1, t2)
            if t == np.inf:
                status = INFEASIBLE
                break
            if t2 == np.inf:
                for a in range(q):
                    u[a] -= t * r[a]
                up += t
            else:
                for i in range(n):
                    y[i] += t * z[i]
                for a in range(q):
                    u[a] -= t * r[a]
                up += t
                if t == t2:
                    active[q] = p
                    u[q] = up
                    q += 1
                    break
            # drop the blocking constraint
            for a in range(drop, q - 1):
                active[a] = active[a + 1]
                u[a] = u[a + 1]
            q -= 1
        if status != OPTIMAL:
            break

    x = np.empty(n)
    for i in range(n):
        x[i] = y[i] / sq[i]
    for a in range(q):
        lam[active[a]] = max(u[a], 0.0)
    return x, status


def kkt_residuals(d, G, h, x, lam):
    """Stationarity, primal violation, dual violation, complementarity (max abs)."""
    d = np.asarray(d, float)
    G = np.asarray(G, float)
    h = np.asarray(h, float)
    stat = d * x + G.T @ lam
    slack = G @ x - h
    return (
        float(np.max(np.abs(stat), initial=0.0)),
        float(np.max(slack, initial=0.0)),
        float(max(0.0, -np.min(lam, initial=0.0))),
        float(np.max(np.abs(lam * slack), initial=0.0)),
    )
