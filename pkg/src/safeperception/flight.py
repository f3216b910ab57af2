"""Closed-loop flight: sense, track, choose yaw, filter, fly.

One control period runs, in order: obstacle truth and detection, track
update, nominal LQR acceleration, CBF rows (and per-track risk ``h_k``), the
yaw policy, the CLF-CBF-QP, desired attitude and torque, then one RK4 step of
the rigid body.  The whole loop is a single jitted kernel; everything else in
this module prepares its inputs and packages its outputs.
"""

from __future__ import annotations

import json
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._jit import backend, clock, jit
from .baselines import FIXED, LOOK_AHEAD, NEAREST, YawPolicy, look_ahead_kernel, nearest_kernel
from .config import Config
from .dynamics import C_BARRIER, C_RADIUS, obstacle_kinematics, step_uav_kernel
from .mathcore import Rng, body_z, quat_from_yaw, quat_yaw, wrap_angle
from .missions import generate_obstacles, mission_vector, profile_of, reference_kernel
from .perception import confidence_beta, optimal_yaw_kernel, risk_alpha, yaw_grid
from .safety import cbf_row_kernel, clf_row_kernel, filter_kernel
from .sensing import T_COLS, T_H, T_POS, T_SEEN, T_TAU, T_VEL, detect_kernel, update_tracks_kernel
from .tracking import attitude_control_kernel, desired_attitude_kernel, force_from_mu_kernel, position_control_kernel

FlightParams = namedtuple(
    "FlightParams",
    [
        "dt", "n_steps", "mass", "uav_radius", "k_p", "k_v", "p11", "p12", "p22", "clf_rate", "use_clf",
        "xi", "relax_weight", "k_q", "k_omega", "zeta", "omega_n", "robust_margin", "alpha_obs", "gamma", "beta_obs", "lam",
        "sigma", "kappa", "rho", "mode", "n_nodes", "epsilon", "period", "coast", "policy", "fixed_value",
        "preview", "omniscient", "timing", "explore_alpha", "explore_beta", "explore_preview",
    ],
)

OK, BLOWUP = 0, 1


@jit
def _fly(p, J, Hd, mu_min, mu_max, psis, obs, mission, x0, psi0,
         log_x, log_mu_d, log_mu, log_delta, log_psi_d, log_B, log_clear,
         log_tau, log_seen, log_tpos, log_h, log_status, log_solve):
    """Run the closed loop for ``p.n_steps`` steps; return ``(status, steps_done)``."""
    n_steps = int(p.n_steps)
    n_obs = obs.shape[0]
    dt = p.dt
    period = int(p.period)
    policy = int(p.policy)

    x = x0.copy()
    tracks = np.zeros((n_obs, T_COLS))
    track_acc = np.zeros((n_obs, 3))
    pos = np.zeros((n_obs, 3))
    vel = np.zeros((n_obs, 3))
    acc = np.zeros((n_obs, 3))
    detected = np.zeros(n_obs, dtype=np.bool_)
    rows = np.zeros((max(n_obs, 1), 4))
    row = np.zeros(4)
    clf = np.zeros(4)
    lam = np.zeros(n_obs + 8)
    peaks = np.zeros((n_obs + 1, 4))
    r_d = np.zeros(3)
    v_d = np.zeros(3)
    a_d = np.zeros(3)
    r_p = np.zeros(3)
    v_p = np.zeros(3)
    a_p = np.zeros(3)
    zero3 = np.zeros(3)
    psi_d = psi0
    q_d = quat_from_yaw(psi0)
    t0 = 0.0

    for k in range(n_steps):
        t = k * dt
        r = x[0:3]
        v = x[3:6]
        q = x[6:10]
        w = x[10:13]
        psi_now = quat_yaw(q)

        # truth, detection, tracks
        for j in range(n_obs):
            obstacle_kinematics(obs[j], t, pos[j], vel[j], acc[j])
            dx = pos[j, 0] - r[0]
            dy = pos[j, 1] - r[1]
            dz = pos[j, 2] - r[2]
            dist = math.sqrt(dx * dx + dy * dy + dz * dz)
            log_B[k, j] = dist - obs[j, C_BARRIER]
            log_clear[k, j] = dist - obs[j, C_RADIUS] - p.uav_radius
            if p.omniscient > 0.5:
                detected[j] = True
            else:
                detected[j] = detect_kernel(r, psi_now, p.sigma, p.rho, pos[j], obs[j, C_RADIUS])
        update_tracks_kernel(tracks, detected, pos, vel, dt, p.coast > 0.5)
        for j in range(n_obs):
            if detected[j]:
                for i in range(3):
                    track_acc[j, i] = acc[j, i]
            elif p.coast > 0.5:
                for i in range(3):
                    track_acc[j, i] = 0.0

        # nominal control
        reference_kernel(mission, t, r_d, v_d, a_d)
        mu_d = position_control_kernel(r, v, r_d, v_d, a_d, p.k_p, p.k_v)

        # CBF rows and risk of every tracked obstacle
        n_rows = 0
        for j in range(n_obs):
            tracks[j, T_H] = np.inf
            if tracks[j, T_SEEN] < 0.5:
                continue
            ok = cbf_row_kernel(r, v, tracks[j, T_POS:T_POS + 3], tracks[j, T_VEL:T_VEL + 3], track_acc[j],
                                obs[j, C_BARRIER], p.zeta, p.omega_n, row)
            if not ok:
                continue
            for i in range(3):
                rows[n_rows, i] = row[i]
            # the attitude loop only approximately realises mu; tighten by the tracking-error bound
            rows[n_rows, 3] = row[3] - p.robust_margin
            n_rows += 1
            tracks[j, T_H] = row[3] - (row[0] * mu_d[0] + row[1] * mu_d[1] + row[2] * mu_d[2])

        # yaw reference
        log_solve[k] = np.nan
        if k % period == 0:
            if policy == FIXED:
                psi_d = p.fixed_value
            else:
                reference_kernel(mission, t + p.preview, r_p, v_p, a_p)
                la = look_ahead_kernel(r, r_p, psi_d)
                if policy == LOOK_AHEAD:
                    psi_d = la
                elif policy == NEAREST:
                    psi_d = nearest_kernel(r, tracks, la)
                else:
                    n_pk = 0
                    for j in range(n_obs):
                        if tracks[j, T_SEEN] < 0.5 or not math.isfinite(tracks[j, T_H]):
                            continue
                        ex = tracks[j, T_POS] - r[0]
                        ey = tracks[j, T_POS + 1] - r[1]
                        peaks[n_pk, 0] = math.sqrt(ex * ex + ey * ey)
                        peaks[n_pk, 1] = math.atan2(ey, ex)
                        peaks[n_pk, 2] = risk_alpha(tracks[j, T_H], p.alpha_obs, p.gamma)
                        peaks[n_pk, 3] = confidence_beta(tracks[j, T_TAU], p.beta_obs, p.lam)
                        n_pk += 1
                    if p.explore_alpha > 0.0:
                        reference_kernel(mission, t + p.explore_preview, r_p, v_p, a_p)
                        ex = r_p[0] - r[0]
                        ey = r_p[1] - r[1]
                        peaks[n_pk, 0] = math.sqrt(ex * ex + ey * ey)
                        peaks[n_pk, 1] = math.atan2(ey, ex)
                        peaks[n_pk, 2] = p.explore_alpha
                        peaks[n_pk, 3] = p.explore_beta
                        n_pk += 1
                    if p.timing > 0.5:
                        t0 = clock()
                    psi_d = optimal_yaw_kernel(peaks[:n_pk], psis, p.sigma, p.kappa, int(p.mode), p.rho,
                                               int(p.n_nodes), psi_d, p.epsilon)
                    if p.timing > 0.5:
                        log_solve[k] = (clock() - t0) * 1e6

        # safety filter
        if p.use_clf > 0.5:
            clf_row_kernel(r, v, r_d, v_d, a_d, p.clf_rate, p.p11, p.p12, p.p22, clf)
        mu, delta, status = filter_kernel(mu_d, Hd, p.xi, rows, n_rows, clf, p.use_clf > 0.5,
                                          mu_min, mu_max, p.relax_weight, lam)

        # attitude
        f_d = force_from_mu_kernel(mu, p.mass)
        q_new, ok = desired_attitude_kernel(f_d, psi_d)
        if ok:
            q_d = q_new
        zb = body_z(q)
        thrust = max(f_d[0] * zb[0] + f_d[1] * zb[1] + f_d[2] * zb[2], 0.0)
        tau = attitude_control_kernel(q, w, q_d, zero3, zero3, p.k_q, p.k_omega, J)

        # log
        for i in range(13):
            log_x[k, i] = x[i]
        for i in range(3):
            log_mu_d[k, i] = mu_d[i]
            log_mu[k, i] = mu[i]
        log_delta[k] = delta
        log_psi_d[k] = psi_d
        log_status[k] = status
        for j in range(n_obs):
            log_tau[k, j] = tracks[j, T_TAU]
            log_seen[k, j] = tracks[j, T_SEEN] > 0.5
            log_h[k, j] = tracks[j, T_H]
            for i in range(3):
                log_tpos[k, j, i] = tracks[j, T_POS + i]

        x = step_uav_kernel(x, thrust, tau, p.mass, J, dt)
        for i in range(13):
            if not math.isfinite(x[i]):
                return BLOWUP, k + 1
    return OK, n_steps


@dataclass
class FlightRecord:
    """Per-step log of one flight plus its verdicts."""

    profile: str
    policy: str
    seed: int
    dt: float
    t: np.ndarray
    states: np.ndarray
    mu_d: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    psi_d: np.ndarray
    B: np.ndarray
    clearance: np.ndarray
    track_tau: np.ndarray
    track_seen: np.ndarray
    track_pos: np.ndarray
    track_h: np.ndarray
    qp_status: np.ndarray
    solve_us: np.ndarray
    failed: bool
    collision_free: bool = False
    safe: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def n_obstacles(self) -> int:
        return self.B.shape[1]

    @property
    def infeasible_steps(self) -> int:
        return int(np.count_nonzero(self.qp_status != 0))

    @property
    def min_B(self) -> float:
        return float(self.B.min()) if self.B.size else math.inf

    @property
    def min_clearance(self) -> float:
        return float(self.clearance.min()) if self.clearance.size else math.inf

    @property
    def yaw(self) -> np.ndarray:
        return np.array([quat_yaw(q) for q in self.states[:, 6:10]])

    def solve_times(self) -> np.ndarray:
        return self.solve_us[np.isfinite(self.solve_us)]

    def csv_columns(self) -> list:
        cols = ["t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz",
                "mu_d_x", "mu_d_y", "mu_d_z", "mu_x", "mu_y", "mu_z", "delta", "psi_d", "qp_status"]
        for j in range(self.n_obstacles):
            cols += [f"B_{j}", f"seen_{j}", f"tau_{j}", f"h_{j}", f"track_x_{j}", f"track_y_{j}", f"track_z_{j}"]
        return cols

    def _row(self, k: int) -> list:
        vals = [self.t[k], *self.states[k], *self.mu_d[k], *self.mu[k], self.delta[k], self.psi_d[k],
                int(self.qp_status[k])]
        for j in range(self.n_obstacles):
            vals += [self.B[k, j], int(self.track_seen[k, j]), self.track_tau[k, j], self.track_h[k, j],
                     *self.track_pos[k, j]]
        return vals

    def write_csv(self, fh) -> None:
        fh.write(",".join(self.csv_columns()) + "\n")
        for k in range(len(self.t)):
            fh.write(",".join(_fmt(v) for v in self._row(k)) + "\n")

    def write_jsonl(self, fh) -> None:
        head = {"type": "meta", **self.meta, "collision_free": self.collision_free, "safe": self.safe,
                "failed": self.failed, "min_B": self.min_B, "min_clearance": self.min_clearance}
        fh.write(json.dumps(head, sort_keys=True, default=_json_default) + "\n")
        cols = self.csv_columns()
        for k in range(len(self.t)):
            rec = {"type": "step"}
            rec.update({c: _jsonable(v) for c, v in zip(cols, self._row(k))})
            fh.write(json.dumps(rec) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return repr(v)


def _jsonable(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def classify(record: FlightRecord) -> tuple[bool, bool]:
    """``(collision_free, safe)``.

    Collision-free needs a strictly positive body clearance at every logged
    step; safe needs ``B >= 0`` throughout.  A failed flight is neither.
    """
    if record.failed:
        return False, False
    collision_free = bool(record.clearance.size == 0 or record.clearance.min() > 0.0)
    safe = bool(record.B.size == 0 or record.B.min() >= 0.0)
    return collision_free, safe


def flight_params(cfg: Config, policy: YawPolicy, duration: float, omniscient=False, timing=False) -> FlightParams:
    c = cfg.control
    K = c.lqr()
    if c.clf_weighting == "identity":
        P = np.eye(2)
    else:
        P = K.P
    sensor = cfg.sensor.model()
    yo = cfg.perception.yaw_opt()
    return FlightParams(
        dt=float(c.dt), n_steps=float(int(round(duration / c.dt))), mass=float(cfg.uav.mass),
        uav_radius=float(cfg.uav.uav_radius), k_p=K.k_p, k_v=K.k_v,
        p11=float(P[0, 0]), p12=float(P[0, 1]), p22=float(P[1, 1]), clf_rate=float(c.clf_rate()),
        use_clf=float(c.clf_weighting != "off"), xi=float(c.xi), relax_weight=float(c.relax_weight),
        k_q=float(c.k_q), k_omega=float(c.k_omega), zeta=float(cfg.cbf.zeta), omega_n=float(cfg.cbf.omega_n),
        robust_margin=float(cfg.cbf.robust_margin),
        alpha_obs=float(cfg.risk.alpha_obs), gamma=float(cfg.risk.gamma), beta_obs=float(cfg.risk.beta_obs),
        lam=float(cfg.risk.lam), sigma=float(sensor.sigma), kappa=float(sensor.kappa_eff), rho=float(sensor.rho),
        mode=float(sensor.mode_code), n_nodes=float(yo.quadrature_points), epsilon=float(yo.epsilon),
        period=float(cfg.perception.period_steps), coast=float(cfg.perception.coast), policy=float(policy.code),
        fixed_value=float(wrap_angle(policy.fixed_value)), preview=float(cfg.policy.look_ahead_preview),
        omniscient=float(bool(omniscient)), timing=float(bool(timing)),
        explore_alpha=float(cfg.perception.explore_alpha), explore_beta=float(cfg.perception.explore_beta),
        explore_preview=float(cfg.perception.explore_preview),
    )


def obstacle_table(obstacles) -> np.ndarray:
    if not obstacles:
        return np.zeros((0, C_BARRIER + 1))
    return np.array([traj.to_row(radius, R) for traj, radius, R in obstacles])


def initial_state(mission: np.ndarray, psi0: float) -> np.ndarray:
    r, v, a = np.zeros(3), np.zeros(3), np.zeros(3)
    reference_kernel(mission, 0.0, r, v, a)
    x0 = np.zeros(13)
    x0[0:3] = r
    x0[3:6] = v
    x0[6:10] = quat_from_yaw(psi0)
    return x0


def make_policy(cfg: Config, kind: str) -> YawPolicy:
    return YawPolicy(kind, math.radians(cfg.policy.fixed_value_deg))


def run_flight(cfg: Config, profile: str, policy: str | YawPolicy, seed: int, *, omniscient: bool = False,
               timing: bool = False, obstacles=None) -> FlightRecord:
    """Fly one mission; obstacles come from ``Rng(seed)`` unless given."""
    pol = policy if isinstance(policy, YawPolicy) else make_policy(cfg, policy)
    prof = profile_of(cfg, profile)
    if obstacles is None:
        obstacles = generate_obstacles(prof, cfg.safety, cfg.uav.uav_radius, Rng(seed), cfg.obstacles)
    obs = obstacle_table(obstacles)
    mission = mission_vector(prof)
    p = flight_params(cfg, pol, prof.duration, omniscient, timing)
    n = int(p.n_steps)
    n_obs = obs.shape[0]
    r0, v0, a0 = np.zeros(3), np.zeros(3), np.zeros(3)
    reference_kernel(mission, 0.0, r0, v0, a0)
    psi0 = math.atan2(v0[1], v0[0]) if np.hypot(v0[0], v0[1]) > 1e-9 else 0.0
    x0 = initial_state(mission, psi0)

    log = dict(
        log_x=np.full((n, 13), np.nan), log_mu_d=np.full((n, 3), np.nan), log_mu=np.full((n, 3), np.nan),
        log_delta=np.full(n, np.nan), log_psi_d=np.full(n, np.nan), log_B=np.full((n, n_obs), np.nan),
        log_clear=np.full((n, n_obs), np.nan), log_tau=np.zeros((n, n_obs)),
        log_seen=np.zeros((n, n_obs), dtype=np.bool_), log_tpos=np.zeros((n, n_obs, 3)),
        log_h=np.full((n, n_obs), np.inf), log_status=np.zeros(n, dtype=np.int64), log_solve=np.full(n, np.nan),
    )
    cu = cfg.uav
    status, done = _fly(p, cu.J, np.asarray(cfg.control.H_qp, float), np.asarray(cu.mu_min, float),
                        np.asarray(cu.mu_max, float), yaw_grid(cfg.perception.yaw_opt().search_increment),
                        obs, mission, x0, psi0, **log)
    sl = slice(0, done)
    rec = FlightRecord(
        profile=profile, policy=pol.kind, seed=int(seed), dt=p.dt, t=np.arange(done) * p.dt,
        states=log["log_x"][sl], mu_d=log["log_mu_d"][sl], mu=log["log_mu"][sl], delta=log["log_delta"][sl],
        psi_d=log["log_psi_d"][sl], B=log["log_B"][sl], clearance=log["log_clear"][sl],
        track_tau=log["log_tau"][sl], track_seen=log["log_seen"][sl], track_pos=log["log_tpos"][sl],
        track_h=log["log_h"][sl], qp_status=log["log_status"][sl], solve_us=log["log_solve"][sl],
        failed=status != OK,
        meta={"profile": profile, "policy": pol.kind, "seed": int(seed), "omniscient": bool(omniscient),
              "version": __version__, "backend": backend(), "config": cfg.to_dict(),
              "R": cfg.safety.barrier_radius(cu.uav_radius),
              "barrier_radius_rule": "R = safety_factor * (obstacle_radius_true + uav_radius)"},
    )
    rec.collision_free, rec.safe = classify(rec)
    return rec
