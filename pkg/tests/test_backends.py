import json
import os
import subprocess
import sys

import numpy as np

SNIPPET = """
import json, math
import numpy as np
from safeperception._jit import backend
from safeperception.config import Config
from safeperception.flight import run_flight
from safeperception.perception import SensorModel, objective_gamma, radial_profile_H, yaw_grid
cfg = Config().replace(corridor={"duration": 0.4, "obstacle_count": 4})
rec = run_flight(cfg, "corridor", "safety_aware", 3)
peaks = np.array([[1.0, 0.3, 1.0, 2.0], [2.0, -1.0, 0.5, 10.0]])
sensor = SensorModel(math.radians(30), None, 3.0, "degraded")
print(json.dumps({"backend": backend(), "states": rec.states[-1].tolist(), "psi_d": rec.psi_d.tolist(),
                  "H": radial_profile_H(peaks, 3.0, 0.2),
                  "gamma": np.asarray(objective_gamma(peaks, sensor, yaw_grid(math.radians(9)))).tolist()}))
"""


def _run(pure):
    env = dict(os.environ, SAFEPERCEPTION_PURE_NUMPY="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_numpy_fallback_matches_numba():
    a, b = _run(False), _run(True)
    assert a["backend"] == "numba" and b["backend"] == "numpy"
    for key in ("states", "psi_d", "gamma"):
        assert np.allclose(a[key], b[key], rtol=1e-9, atol=1e-12)
    assert abs(a["H"] - b["H"]) <= 1e-12 * abs(a["H"])
