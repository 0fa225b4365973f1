"""Kinematics and tracking-status classification."""

import math
import random

import pytest

from rcs_sim.errors import ConfigurationError
from rcs_sim.world import (
    KinematicState,
    SeededRandomWalk,
    Sinusoid,
    TrackingStatus,
    TrackingThresholds,
    Vec3,
    WaypointLoop,
    ZERO,
    classify_tracking_status,
    distance,
    step_target,
    step_uav,
)


def test_distance_345():
    assert distance(Vec3(0, 0, 0), Vec3(3, 4, 0)) == 5.0


def test_distance_identity():
    p = Vec3(1.5, -2.0, 0.25)
    assert distance(p, p) == 0.0


def test_distance_122():
    assert distance(Vec3(1, 2, 2), Vec3(0, 0, 0)) == 3.0


def test_distance_symmetric_nonnegative():
    rng = random.Random(0)
    for _ in range(200):
        a = Vec3(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9))
        b = Vec3(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9))
        assert distance(a, b) == distance(b, a)
        assert distance(a, b) >= 0.0


def test_vec3_rejects_non_finite():
    with pytest.raises(ValueError):
        Vec3(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        Vec3(float("inf"), 0, 0)


def test_thresholds_validation():
    with pytest.raises(ConfigurationError):
        TrackingThresholds(5.0, 5.0)
    with pytest.raises(ConfigurationError):
        TrackingThresholds(0.0, 5.0)
    with pytest.raises(ConfigurationError):
        TrackingThresholds(-1.0, 2.0)


def test_classification_examples():
    th = TrackingThresholds(1.0, 5.0)
    assert classify_tracking_status(0.5, th) is TrackingStatus.UNSAFE
    assert classify_tracking_status(1.0, th) is TrackingStatus.UNSAFE  # boundary in
    assert classify_tracking_status(3.0, th) is TrackingStatus.SUCCESSFUL
    assert classify_tracking_status(5.0, th) is TrackingStatus.SUCCESSFUL  # boundary in
    assert classify_tracking_status(7.0, th) is TrackingStatus.UNSUCCESSFUL


def test_classification_partition_and_monotone():
    th = TrackingThresholds(2.0, 6.0)
    rng = random.Random(1)
    ds = sorted(rng.uniform(0, 12) for _ in range(500))
    statuses = [classify_tracking_status(d, th) for d in ds]
    assert all(s in (TrackingStatus.UNSAFE, TrackingStatus.SUCCESSFUL,
                     TrackingStatus.UNSUCCESSFUL) for s in statuses)
    # status code never decreases as distance grows
    codes = [int(s) for s in statuses]
    assert codes == sorted(codes)


def test_classification_rejects_bad_distance():
    th = TrackingThresholds(1.0, 5.0)
    with pytest.raises(ValueError):
        classify_tracking_status(-0.1, th)
    with pytest.raises(ValueError):
        classify_tracking_status(float("nan"), th)


def test_waypoint_single_point_parks():
    traj = WaypointLoop(points=(Vec3(2, 3, 0),), speed=1.0)
    for t in (0, 1, 7, 500):
        st = step_target(traj, t, 0.1)
        assert st.position == Vec3(2, 3, 0)
        assert st.velocity == ZERO


def test_waypoint_loop_traversal_and_speed_bound():
    traj = WaypointLoop(
        points=(Vec3(0, 0, 0), Vec3(10, 0, 0), Vec3(10, 10, 0), Vec3(0, 10, 0)),
        speed=1.0,
    )
    prev = step_target(traj, 0, 0.1)
    for t in range(1, 900):
        st = step_target(traj, t, 0.1)
        assert st.speed() <= traj.max_speed() + 1e-9
        prev = st
    # after one full lap (40 m at 1 m/s, dt=0.1 -> 400 slots) we are back at start
    lap = step_target(traj, 400, 0.1)
    assert abs(lap.position.x) < 1e-9 and abs(lap.position.y) < 1e-9


def test_sinusoid_pure_drift_hand_integration():
    traj = Sinusoid(amplitude=0.0, period=10.0, drift=Vec3(1, 0, 0))
    for t in (1, 2, 17):
        st = step_target(traj, t, 0.1)
        assert st.position.x == pytest.approx(0.1 * t, abs=1e-12)
        assert st.velocity.x == pytest.approx(1.0, abs=1e-9)


def test_sinusoid_speed_bound():
    traj = Sinusoid(amplitude=2.0, period=20.0, drift=Vec3(0.5, 0, 0))
    for t in range(1, 500):
        assert step_target(traj, t, 0.1).speed() <= traj.max_speed() + 1e-9


def test_random_walk_deterministic_and_bounded():
    traj = SeededRandomWalk(step_stddev=0.3, seed=99, max_speed=0.8)
    a = [step_target(traj, t, 0.1) for t in range(1, 40)]
    b = [step_target(traj, t, 0.1) for t in range(1, 40)]
    assert a == b
    assert all(st.speed() <= 0.8 for st in a)


def test_random_walk_unresolved_seed_rejected():
    traj = SeededRandomWalk(step_stddev=0.3, seed=None)
    with pytest.raises(ValueError):
        step_target(traj, 3, 0.1)


def test_random_walk_planar_stays_flat():
    traj = SeededRandomWalk(step_stddev=0.5, seed=4, planar=True)
    assert all(step_target(traj, t, 0.1).position.z == 0.0 for t in (1, 10, 50))


def test_step_target_preconditions():
    traj = Sinusoid(amplitude=1.0, period=10.0)
    with pytest.raises(ValueError):
        step_target(traj, -1, 0.1)
    with pytest.raises(ValueError):
        step_target(traj, 1, 0.0)


def test_step_uav_zero_command():
    st = KinematicState(Vec3(1, 2, 3), Vec3(0.5, 0, 0))
    out = step_uav(st, ZERO, 0.1, 2.0)
    assert out.position == st.position
    assert out.velocity == ZERO


def test_step_uav_clamp_and_integrate():
    out = step_uav(KinematicState(ZERO), Vec3(2, 0, 0), 1.0, 1.0)
    assert out.position == Vec3(1, 0, 0)
    assert out.velocity == Vec3(1, 0, 0)


def test_step_uav_clamp_inactive_when_within_cap():
    cmd = Vec3(0.3, -0.4, 0.1)
    out = step_uav(KinematicState(ZERO), cmd, 0.1, 2.0)
    assert out.velocity == cmd


def test_step_uav_never_exceeds_cap():
    rng = random.Random(3)
    for _ in range(500):
        cmd = Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10))
        cap = rng.uniform(0.1, 3.0)
        out = step_uav(KinematicState(ZERO), cmd, 0.1, cap)
        assert out.speed() <= cap


def test_step_uav_rejects_bad_inputs():
    with pytest.raises(ValueError):
        step_uav(KinematicState(ZERO), Vec3(1, 0, 0), -0.1, 1.0)
    with pytest.raises(ValueError):
        step_uav(KinematicState(ZERO), Vec3(1, 0, 0), 0.1, 0.0)


def test_trajectory_validation():
    with pytest.raises(ConfigurationError):
        Sinusoid(amplitude=-1.0, period=10.0)
    with pytest.raises(ConfigurationError):
        Sinusoid(amplitude=1.0, period=0.0)
    with pytest.raises(ConfigurationError):
        WaypointLoop(points=(), speed=1.0)
    with pytest.raises(ConfigurationError):
        WaypointLoop(points=(Vec3(0, 0, 0), Vec3(0, 0, 0)), speed=1.0)
    with pytest.raises(ConfigurationError):
        SeededRandomWalk(step_stddev=-0.1, seed=1)
    with pytest.raises(ConfigurationError):
        SeededRandomWalk(step_stddev=0.1, seed=1, max_speed=0.0)
