import io
import json
import math

import numpy as np
import pytest

from safeperception.config import Config
from safeperception.dynamics import ObstacleTrajectory
from safeperception.flight import FlightRecord, classify, run_flight
from safeperception.mathcore import wrap_angle
from safeperception.missions import reference_at

EMPTY = Config().replace(infinity={"obstacle_count": 0}, corridor={"obstacle_count": 0})


def position_error(rec, profile):
    ref = np.array([reference_at(profile, t).r_d for t in rec.t])
    return np.linalg.norm(rec.states[:, 0:3] - ref, axis=1)


@pytest.mark.parametrize("policy", ["fixed", "look_ahead", "nearest", "safety_aware"])
def test_obstacle_free_tracking(policy):
    rec = run_flight(EMPTY, "infinity", policy, 0)
    assert rec.collision_free and rec.safe and not rec.failed
    err = position_error(rec, EMPTY.infinity)
    assert err[rec.t >= 5.0].max() < 0.05
    yaw_err = np.array([wrap_angle(a - b) for a, b in zip(rec.yaw, rec.psi_d)])
    assert math.degrees(np.sqrt(np.mean(yaw_err[rec.t >= 1.0] ** 2))) < 5.0


def test_deterministic_record():
    a = run_flight(Config(), "corridor", "safety_aware", 11)
    b = run_flight(Config(), "corridor", "safety_aware", 11)
    for name in ("states", "mu", "psi_d", "B", "track_pos", "track_h"):
        assert np.array_equal(getattr(a, name), getattr(b, name), equal_nan=True)


def test_omniscient_flight_safe():
    rec = run_flight(Config(), "infinity", "look_ahead", 3, omniscient=True)
    assert rec.safe and rec.collision_free
    assert rec.min_B >= -1e-6


def test_never_seen_obstacle_has_no_influence():
    cfg = Config()
    far = (ObstacleTrajectory("static", (500.0, 500.0, 0.5)), 0.1, 0.24)
    near = (ObstacleTrajectory("linear", (3.0, 0.5, 0.5), (-0.2, 0.0, 0.0)), 0.1, 0.24)
    a = run_flight(cfg, "infinity", "safety_aware", 0, obstacles=[near])
    b = run_flight(cfg, "infinity", "safety_aware", 0, obstacles=[near, far])
    assert not b.track_seen[:, 1].any()
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.psi_d, b.psi_d)


def _record(clearance, B, failed=False):
    n = len(clearance)
    z = np.zeros((n, 3))
    return FlightRecord("infinity", "fixed", 0, 0.002, np.arange(n) * 0.002, np.zeros((n, 13)), z, z, np.zeros(n),
                        np.zeros(n), np.array(B, float)[:, None], np.array(clearance, float)[:, None],
                        np.zeros((n, 1)), np.zeros((n, 1), bool), np.zeros((n, 1, 3)), np.zeros((n, 1)),
                        np.zeros(n, int), np.full(n, np.nan), failed)


def test_classify_rules():
    assert classify(_record([0.2, 0.05], [0.1, -0.01])) == (True, False)
    assert classify(_record([0.2, 0.0], [0.1, -0.08])) == (False, False)  # grazing contact
    assert classify(_record([0.2, 0.1], [0.1, 0.0])) == (True, True)
    assert classify(_record([0.2, 0.1], [0.1, 0.1], failed=True)) == (False, False)


def test_safe_implies_collision_free_geometry():
    cfg = Config()
    R = cfg.safety.barrier_radius(cfg.uav.uav_radius)
    # B >= 0 means distance >= R > radius_true + uav_radius
    assert R > cfg.safety.obstacle_radius_true + cfg.uav.uav_radius


def test_writers():
    rec = run_flight(Config().replace(corridor={"duration": 0.1}), "corridor", "nearest", 2)
    buf = io.StringIO()
    rec.write_jsonl(buf)
    lines = buf.getvalue().splitlines()
    head = json.loads(lines[0])
    assert head["type"] == "meta" and head["seed"] == 2 and "config" in head and "version" in head
    assert head["barrier_radius_rule"].startswith("R = safety_factor")
    assert len(lines) == 1 + len(rec.t)
    step = json.loads(lines[1])
    assert step["type"] == "step" and step["t"] == 0.0
    buf = io.StringIO()
    rec.write_csv(buf)
    rows = buf.getvalue().splitlines()
    assert rows[0].split(",") == rec.csv_columns()
    assert len(rows) == 1 + len(rec.t)
