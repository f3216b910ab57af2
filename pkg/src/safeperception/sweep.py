"""Solve-time sweep of the yaw search over grid increments."""

from __future__ import annotations

import math

import numpy as np

from ._jit import clock, jit
from .config import Config
from .mathcore import Rng
from .perception import evaluations, optimal_yaw_kernel, yaw_grid


def random_scenes(n_scenes: int, n_peaks: int, seed: int, r_max: float = 3.0) -> np.ndarray:
    """``(n_scenes, n_peaks, 4)`` peak arrays drawn around the UAV."""
    rng = Rng(seed)
    out = np.empty((n_scenes, n_peaks, 4))
    out[..., 0] = rng.uniform(0.2, r_max, size=(n_scenes, n_peaks))
    out[..., 1] = rng.uniform(-math.pi, math.pi, size=(n_scenes, n_peaks))
    out[..., 2] = rng.uniform(0.05, 1.0, size=(n_scenes, n_peaks))
    out[..., 3] = rng.uniform(0.5, 4.0, size=(n_scenes, n_peaks))
    return out


@jit
def _timed_solves(scenes, psis, sigma, kappa, mode, rho, n_nodes, epsilon, repeats):
    """Total seconds spent in ``repeats`` passes of optimal yaw over every scene."""
    total = 0.0
    sink = 0.0
    for _ in range(repeats):
        for s in range(scenes.shape[0]):
            t0 = clock()
            sink += optimal_yaw_kernel(scenes[s], psis, sigma, kappa, mode, rho, n_nodes, 0.0, epsilon)
            total += clock() - t0
    if sink == 12345.678:  # keep the result live
        total += 0.0
    return total


def solve_time_sweep(cfg: Config, increments_deg, n_scenes: int = 50, n_peaks: int = 10, seed: int = 0,
                     repeats: int = 3) -> list:
    """Mean optimal-yaw time (µs) per grid increment on a fixed random scene set.

    Rows are dicts with ``increment_deg, grid_points, evaluations, mean_solve_us``.
    """
    sensor = cfg.sensor.model()
    scenes = random_scenes(n_scenes, n_peaks, seed, r_max=sensor.rho)
    rows = []
    for inc in increments_deg:
        yo = cfg.replace(perception={"search_increment_deg": float(inc)}).perception.yaw_opt()
        psis = yaw_grid(yo.search_increment)
        # warm-up (compilation, caches)
        _timed_solves(scenes[:1], psis, sensor.sigma, sensor.kappa_eff, sensor.mode_code, sensor.rho,
                      yo.quadrature_points, yo.epsilon, 1)
        total = _timed_solves(scenes, psis, sensor.sigma, sensor.kappa_eff, sensor.mode_code, sensor.rho,
                              yo.quadrature_points, yo.epsilon, repeats)
        rows.append({"increment_deg": float(inc), "grid_points": len(psis), "evaluations": evaluations(yo),
                     "mean_solve_us": total / (n_scenes * repeats) * 1e6})
    return rows


def linear_fit_r2(x, y) -> tuple[float, float, float]:
    """Least-squares ``y = a x + b``; returns ``(a, b, R^2)``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2
