"""Risk density, FOV quality, and the optimal sensor yaw search.

A scene is a set of peaks ``(r_k, theta_k, alpha_k, beta_k)`` in polar
coordinates around the UAV.  The radial part of the observed-risk integral is
evaluated in closed form (:func:`radial_profile_H`); the angular convolution
with the quality function uses a fixed-node composite Simpson rule; the yaw
is picked by exhaustive search on a uniform grid.

Kernels take the scene as a ``(N, 4)`` float array with columns
``r, theta, alpha, beta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._jit import jit, pick
from .mathcore import TWO_PI, wrap_angle

BINARY = 0
DEGRADED = 1
_MODES = {"binary": BINARY, "degraded": DEGRADED}

_EXP_CAP = 700.0


@dataclass(frozen=True)
class DensityPeak:
    r: float
    theta: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("r", "theta", "alpha", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"peak field {name} must be finite")
        if self.r < 0:
            raise ValueError("peak r must be >= 0")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("peak alpha and beta must be > 0")


@dataclass
class DensityScene:
    peaks: list = field(default_factory=list)

    def as_array(self) -> np.ndarray:
        if not self.peaks:
            return np.zeros((0, 4))
        return np.array([[p.r, wrap_angle(p.theta), p.alpha, p.beta] for p in self.peaks], dtype=float)

    def to_json(self) -> str:
        return json.dumps({"peaks": [asdict(p) for p in self.peaks]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DensityScene":
        doc = json.loads(text)
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc) -> "DensityScene":
        if not isinstance(doc, dict) or not isinstance(doc.get("peaks"), list):
            raise ValueError("scene document must hold a 'peaks' list")
        peaks = []
        for i, raw in enumerate(doc["peaks"]):
            try:
                peaks.append(DensityPeak(float(raw["r"]), float(raw["theta"]),
                                         float(raw["alpha"]), float(raw["beta"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"peak {i}: {exc}") from exc
        return cls(peaks)

    @classmethod
    def from_points(cls, points, alphas, betas) -> "DensityScene":
        """Peaks from planar offsets ``(dx, dy)`` relative to the UAV."""
        peaks = []
        for (dx, dy), a, b in zip(points, alphas, betas):
            peaks.append(DensityPeak(math.hypot(dx, dy), math.atan2(dy, dx), float(a), float(b)))
        return cls(peaks)


@dataclass(frozen=True)
class RiskParams:
    alpha_obs: float = 1.0
    gamma: float = 0.5
    beta_obs: float = 4.0
    lam: float = 0.5

    def __post_init__(self):
        for name in ("alpha_obs", "gamma", "beta_obs", "lam"):
            if not getattr(self, name) > 0:
                raise ValueError(f"risk.{name} must be > 0")


@dataclass(frozen=True)
class SensorModel:
    sigma: float = math.radians(30.0)
    kappa: float | None = None
    rho: float = 3.0
    mode: str = "degraded"

    def __post_init__(self):
        if not 0 < self.sigma <= math.pi:
            raise ValueError("sensor.sigma must lie in (0, pi]")
        if self.mode not in _MODES:
            raise ValueError(f"sensor.mode must be one of {sorted(_MODES)}")
        if self.mode == "degraded" and self.kappa_eff < self.sigma:
            raise ValueError("sensor.kappa must be >= sigma in degraded mode")
        if not self.rho > 0:
            raise ValueError("sensor.rho must be > 0")

    @property
    def kappa_eff(self) -> float:
        return self.sigma if self.kappa is None else self.kappa

    @property
    def mode_code(self) -> int:
        return _MODES[self.mode]


@dataclass(frozen=True)
class YawOptConfig:
    epsilon: float = 0.0
    search_increment: float = math.radians(9.0)
    quadrature_points: int = 33

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("perception.epsilon must be >= 0")
        if grid_size(self.search_increment) < 8:
            raise ValueError("perception.search_increment must give at least 8 grid points")
        if self.quadrature_points < 17 or self.quadrature_points % 2 == 0:
            raise ValueError("perception.quadrature_points must be odd and >= 17 (composite Simpson)")


def grid_size(increment: float) -> int:
    if not increment > 0:
        raise ValueError("search increment must be > 0")
    return int(round(TWO_PI / increment))


def yaw_grid(increment: float) -> np.ndarray:
    n = grid_size(increment)
    return -math.pi + np.arange(n) * (TWO_PI / n)


@jit
def risk_alpha(h_k, alpha_obs, gamma):
    return alpha_obs * math.exp(min(-gamma * h_k, _EXP_CAP))


@jit
def confidence_beta(tau_k, beta_obs, lam):
    return beta_obs * math.exp(-lam * tau_k)


@jit
def density_eval_kernel(peaks, r, theta):
    total = 0.0
    for k in range(peaks.shape[0]):
        rk = peaks[k, 0]
        bracket = r * r - 2.0 * r * rk * math.cos(theta - peaks[k, 1]) + rk * rk
        total += peaks[k, 2] / (peaks[k, 3] * bracket + 1.0)
    return total


@jit
def quality_eval_kernel(delta, sigma, kappa, mode):
    if abs(delta) > sigma:
        return 0.0
    if mode == BINARY:
        return 1.0
    ck = math.cos(kappa)
    return (math.cos(delta) - ck) / (1.0 - ck)


@jit
def _h_single(alpha, beta, rk, cos_rel, sin_rel, rho):
    a = beta
    b = -2.0 * beta * rk * cos_rel
    c = beta * rk * rk + 1.0
    # 4ac - b^2 written without cancellation
    sd = 2.0 * math.sqrt(beta * (beta * rk * rk * sin_rel * sin_rel + 1.0))
    # atan2 keeps the arctangent on the continuous branch when 2c + b rho < 0
    ang = math.atan2(rho * sd, 2.0 * c + b * rho)
    return alpha / (2.0 * beta) * (math.log1p((a * rho + b) * rho / c) - 2.0 * b / sd * ang)


@jit
def radial_profile_kernel(peaks, rho, theta):
    total = 0.0
    ct = math.cos(theta)
    st = math.sin(theta)
    for k in range(peaks.shape[0]):
        ck = math.cos(peaks[k, 1])
        sk = math.sin(peaks[k, 1])
        total += _h_single(peaks[k, 2], peaks[k, 3], peaks[k, 0], ct * ck + st * sk, st * ck - ct * sk, rho)
    return total


@jit
def _simpson_weights(n, span):
    h = span / (n - 1)
    w = np.empty(n)
    for i in range(n):
        if i == 0 or i == n - 1:
            w[i] = h / 3.0
        elif i % 2 == 1:
            w[i] = 4.0 * h / 3.0
        else:
            w[i] = 2.0 * h / 3.0
    return w


@jit
def _node_weights(sigma, kappa, mode, n):
    """Offsets ``psi - theta`` and combined Simpson-times-quality weights."""
    w = _simpson_weights(n, 2.0 * sigma)
    off = np.empty(n)
    for i in range(n):
        off[i] = sigma - i * (2.0 * sigma / (n - 1))
        if i == n - 1:
            off[i] = -sigma
        w[i] *= quality_eval_kernel(off[i], sigma, kappa, mode)
    return off, w


@jit
def _gamma_grid_loops(peaks, psis, sigma, kappa, mode, rho, n_nodes):
    off, w = _node_weights(sigma, kappa, mode, n_nodes)
    npk = peaks.shape[0]
    cth = np.empty(npk)
    sth = np.empty(npk)
    for k in range(npk):
        cth[k] = math.cos(peaks[k, 1])
        sth[k] = math.sin(peaks[k, 1])
    out = np.zeros(psis.shape[0])
    for j in range(psis.shape[0]):
        acc = 0.0
        for i in range(n_nodes):
            if w[i] == 0.0:
                continue
            theta = psis[j] - off[i]
            ct = math.cos(theta)
            st = math.sin(theta)
            hsum = 0.0
            for k in range(npk):
                hsum += _h_single(peaks[k, 2], peaks[k, 3], peaks[k, 0],
                                  ct * cth[k] + st * sth[k], st * cth[k] - ct * sth[k], rho)
            acc += w[i] * hsum
        out[j] = acc
    return out


def _gamma_grid_numpy(peaks, psis, sigma, kappa, mode, rho, n_nodes):
    psis = np.asarray(psis, dtype=float)
    if peaks.shape[0] == 0:
        return np.zeros(psis.shape[0])
    off, w = _node_weights(sigma, kappa, mode, n_nodes)
    keep = w != 0.0
    off, w = off[keep], w[keep]
    theta = psis[:, None] - off[None, :]                               # (G, Q)
    ct, st = np.cos(theta)[..., None], np.sin(theta)[..., None]
    ck, sk = np.cos(peaks[:, 1]), np.sin(peaks[:, 1])
    cos_rel = ct * ck + st * sk
    sin_rel = st * ck - ct * sk
    rk, alpha, beta = peaks[:, 0], peaks[:, 2], peaks[:, 3]
    a = beta
    b = -2.0 * beta * rk * cos_rel
    c = beta * rk * rk + 1.0
    sd = 2.0 * np.sqrt(beta * (beta * rk * rk * sin_rel * sin_rel + 1.0))
    ang = np.arctan2(rho * sd, 2.0 * c + b * rho)
    hk = alpha / (2.0 * beta) * (np.log1p((a * rho + b) * rho / c) - 2.0 * b / sd * ang)
    return (hk.sum(axis=2) * w).sum(axis=1)


gamma_grid_kernel = pick(_gamma_grid_loops, _gamma_grid_numpy)


@jit
def select_yaw_kernel(psis, gamma, psi_prev, epsilon):
    """Index maximising the penalised objective.

    Ties go to the grid point nearest ``psi_prev`` (wrapped), then the
    smallest angle.
    """
    best = -1
    best_val = -np.inf
    best_dist = np.inf
    for j in range(psis.shape[0]):
        dist = abs(wrap_angle(psis[j] - psi_prev))
        val = gamma[j] - epsilon * dist * dist
        if val > best_val or (val == best_val and dist < best_dist):
            best = j
            best_val = val
            best_dist = dist
    return best


@jit
def optimal_yaw_kernel(peaks, psis, sigma, kappa, mode, rho, n_nodes, psi_prev, epsilon):
    gamma = gamma_grid_kernel(peaks, psis, sigma, kappa, mode, rho, n_nodes)
    return psis[select_yaw_kernel(psis, gamma, psi_prev, epsilon)]


# -- public wrappers -------------------------------------------------------------

def _peaks(scene) -> np.ndarray:
    if isinstance(scene, DensityScene):
        return scene.as_array()
    arr = np.asarray(scene, dtype=float)
    return arr.reshape(-1, 4)


def density_eval(scene, r: float, theta: float) -> float:
    if r < 0:
        raise ValueError("r must be >= 0")
    return float(density_eval_kernel(_peaks(scene), float(r), float(theta)))


def quality_eval(sensor: SensorModel, delta: float) -> float:
    return float(quality_eval_kernel(float(delta), sensor.sigma, sensor.kappa_eff, sensor.mode_code))


def radial_profile_H(scene, rho: float, theta: float) -> float:
    """Closed-form ``int_0^rho Phi(r, theta) r dr``."""
    return float(radial_profile_kernel(_peaks(scene), float(rho), float(theta)))


def objective_gamma(scene, sensor: SensorModel, psi, quadrature_points: int = 33):
    """Observed risk for yaw ``psi`` (scalar or array)."""
    psis = np.atleast_1d(np.asarray(psi, dtype=float))
    out = gamma_grid_kernel(_peaks(scene), psis, sensor.sigma, sensor.kappa_eff, sensor.mode_code,
                            sensor.rho, int(quadrature_points))
    return float(out[0]) if np.ndim(psi) == 0 else out


def penalised_objective(scene, sensor: SensorModel, cfg: YawOptConfig, psi_prev: float):
    """Grid, raw objective and penalised objective over the full circle."""
    psis = yaw_grid(cfg.search_increment)
    gamma = objective_gamma(scene, sensor, psis, cfg.quadrature_points)
    dist = np.abs(np.array([wrap_angle(p - psi_prev) for p in psis]))
    return psis, gamma, gamma - cfg.epsilon * dist * dist


def optimal_yaw(scene, sensor: SensorModel, cfg: YawOptConfig, psi_prev: float) -> float:
    psis = yaw_grid(cfg.search_increment)
    return float(optimal_yaw_kernel(_peaks(scene), psis, sensor.sigma, sensor.kappa_eff, sensor.mode_code,
                                    sensor.rho, cfg.quadrature_points, float(psi_prev), cfg.epsilon))


def evaluations(cfg: YawOptConfig) -> int:
    """Objective evaluations per yaw search (one per grid point)."""
    return grid_size(cfg.search_increment)
