"""Numba kernels versus the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at import
time.  Usage::

    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, math, sys, time
import numpy as np
from safeperception._jit import backend
from safeperception.config import Config
from safeperception.flight import run_flight
from safeperception.perception import SensorModel, objective_gamma, optimal_yaw, YawOptConfig, radial_profile_H
from safeperception.safety import QpProblem, ClfRow, solve_qp
from safeperception.sweep import random_scenes

repeats = int(sys.argv[1])


def best_of(fn):
    fn()  # warm-up / compilation
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


scenes = random_scenes(20, 10, 0)
sensor = SensorModel(math.radians(30), None, 3.0, "degraded")
yo = YawOptConfig(0.002, math.radians(9), 33)
rng = np.random.default_rng(0)
qps = [QpProblem(rng.uniform(-4, 4, 3), cbf=[(np.array([1.0, 0, 0]), -1.0), (np.array([0, 0.6, 0.8]), 0.5)],
                 clf=ClfRow(rng.normal(size=3), 0.1), mu_min=-5 * np.ones(3), mu_max=5 * np.ones(3))
       for _ in range(200)]
short = Config().replace(corridor={"duration": 1.0, "obstacle_count": 6})
out = {
    "backend": backend(),
    "radial_H x2000": best_of(lambda: [radial_profile_H(s, 3.0, 0.1 * i) for i, s in enumerate(scenes) for _ in range(100)]),
    "objective_gamma 40 yaws x20": best_of(lambda: [objective_gamma(s, sensor, np.linspace(-3, 3, 40)) for s in scenes]),
    "optimal_yaw x20": best_of(lambda: [optimal_yaw(s, sensor, yo, 0.0) for s in scenes]),
    "solve_qp x200": best_of(lambda: [solve_qp(p) for p in qps]),
    "flight corridor 1 s": best_of(lambda: run_flight(short, "corridor", "safety_aware", 1)),
}
print(json.dumps(out))
"""


def run(pure: bool, repeats: int) -> dict:
    env = dict(os.environ, SAFEPERCEPTION_PURE_NUMPY="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeats)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run(False, args.repeats), run(True, args.repeats)
    print(f"{'kernel':<30}{'numba ms':>12}{'numpy ms':>12}{'speed-up':>10}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<30}{1e3 * fast[key]:>12.3f}{1e3 * slow[key]:>12.3f}{slow[key] / fast[key]:>10.1f}")


if __name__ == "__main__":
    main()
