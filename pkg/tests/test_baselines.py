import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from safeperception.baselines import YawPolicy, fixed_yaw, look_ahead, nearest_obstacle
from safeperception.dynamics import UavState
from safeperception.sensing import ObstacleTrack
from safeperception.tracking import PositionReference

Z = np.zeros(3)


def uav(x=0.0, y=0.0):
    return UavState(np.array([x, y, 0.5]), Z.copy())


def ref(x, y):
    return PositionReference(np.array([x, y, 0.5]), Z, Z)


def track(i, x, y, seen=True):
    return ObstacleTrack(i, np.array([x, y, 0.5]), Z.copy(), 0.0, 0.0, seen)


def test_fixed():
    assert fixed_yaw(YawPolicy("fixed", 0.0)) == 0.0
    assert fixed_yaw(YawPolicy("fixed", math.pi / 2)) == pytest.approx(math.pi / 2)
    assert fixed_yaw(YawPolicy("fixed", 3 * math.pi)) == pytest.approx(-math.pi)
    with pytest.raises(ValueError):
        YawPolicy("spin")


def test_look_ahead():
    assert look_ahead(uav(), ref(0, 1)) == pytest.approx(math.pi / 2)
    assert look_ahead(uav(), ref(1, 0)) == 0.0
    assert look_ahead(uav(), ref(0, 0), prev=0.7) == 0.7
    assert look_ahead(uav(), ref(-1, 0)) == -math.pi


def test_nearest():
    assert nearest_obstacle(uav(), [track(0, 0, 1)]) == pytest.approx(math.pi / 2)
    assert nearest_obstacle(uav(), [track(0, 0, 2), track(1, 1, 0)]) == 0.0
    assert nearest_obstacle(uav(), [track(0, 0, 1), track(1, 1, 0)]) == pytest.approx(math.pi / 2)
    assert nearest_obstacle(uav(), [track(0, 1, 0), track(1, 0, 1)]) == 0.0
    # unseen tracks are ignored; none seen falls back to look-ahead
    assert nearest_obstacle(uav(), [track(0, 1, 0, seen=False)], ref(0, -1)) == pytest.approx(-math.pi / 2)
    assert nearest_obstacle(uav(), [], ref(0, 1)) == pytest.approx(math.pi / 2)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_outputs_wrapped(x, y, tx, ty):
    for v in (look_ahead(uav(x, y), ref(tx, ty)), nearest_obstacle(uav(x, y), [track(0, tx, ty)], ref(tx, ty))):
        assert -math.pi <= v < math.pi


def test_nearest_switches_only_on_ordering_change():
    a, b = track(0, 1, 0), track(1, -2, 0)
    out = []
    for x in np.linspace(0.0, -1.0, 41):
        out.append(nearest_obstacle(uav(x, 0), [a, b]))
    # switch happens exactly where the distances cross (x = -0.5)
    xs = np.linspace(0.0, -1.0, 41)
    for x, v in zip(xs, out):
        target = 0.0 if abs(1 - x) <= abs(-2 - x) else -math.pi
        assert v == pytest.approx(target)
