"""UAV and target kinematics plus the per-slot tracking-status classification.

Positions are 3D metres; velocities metres/second. The tracking band is
defined by a safety distance d_s and a tracking threshold d_e: a slot is
unsafe at separation <= d_s, successful inside (d_s, d_e], unsuccessful
beyond d_e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Union

import numpy as np

from . import _kernels
from ._rng import make_state, substream_seed
from .errors import ConfigurationError


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not (
            math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)
        ):
            raise ValueError(f"non-finite Vec3 components: {(self.x, self.y, self.z)}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, f: float) -> "Vec3":
        return Vec3(self.x * f, self.y * f, self.z * f)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.z)


ZERO = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class KinematicState:
    position: Vec3
    velocity: Vec3 = ZERO

    def speed(self) -> float:
        return self.velocity.norm()


@dataclass(frozen=True)
class TrackingThresholds:
    d_s: float  # safety distance, m
    d_e: float  # tracking threshold, m

    def __post_init__(self):
        if not (self.d_e > self.d_s > 0):
            raise ConfigurationError(
                f"thresholds: require d_e > d_s > 0, got d_s={self.d_s}, d_e={self.d_e}"
            )


class TrackingStatus(IntEnum):
    """Per-slot tracking classification; values match the engine trace codes."""

    UNSAFE = 0
    SUCCESSFUL = 1
    UNSUCCESSFUL = 2

    @property
    def label(self) -> str:
        return self.name.lower()


def distance(a: Vec3, b: Vec3) -> float:
    """Euclidean UAV-target separation."""
    for v in (a, b):
        if not (math.isfinite(v.x) and math.isfinite(v.y) and math.isfinite(v.z)):
            raise ValueError("distance: non-finite input")
    return _kernels.dist3(a.x, a.y, a.z, b.x, b.y, b.z)


def classify_tracking_status(d_t: float, th: TrackingThresholds) -> TrackingStatus:
    """Unsafe at d_t <= d_s, successful in (d_s, d_e], unsuccessful above d_e."""
    if d_t < 0 or not math.isfinite(d_t):
        raise ValueError(f"classify_tracking_status: bad distance {d_t}")
    return TrackingStatus(_kernels.classify_status(d_t, th.d_s, th.d_e))


# --- target trajectory models ----------------------------------------------


@dataclass(frozen=True)
class WaypointLoop:
    """Constant-speed traversal of a closed polyline; one point means parked."""

    points: tuple
    speed: float = 0.0

    def __post_init__(self):
        if len(self.points) < 1:
            raise ConfigurationError("target.waypoints: need at least one point")
        if self.speed < 0:
            raise ConfigurationError("target.speed: must be >= 0")
        for i in range(len(self.points)):
            j = (i + 1) % len(self.points)
            if len(self.points) > 1 and (self.points[j] - self.points[i]).norm() == 0:
                raise ConfigurationError(
                    "target.waypoints: consecutive duplicate points"
                )

    def max_speed(self) -> float:
        return self.speed if len(self.points) > 1 else 0.0

    def start(self) -> Vec3:
        return self.points[0]


@dataclass(frozen=True)
class Sinusoid:
    """Linear drift plus a sinusoidal oscillation along the y axis."""

    amplitude: float
    period: float
    drift: Vec3 = ZERO
    origin: Vec3 = ZERO

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError("target.amplitude: must be >= 0")
        if self.period <= 0:
            raise ConfigurationError("target.period: must be > 0")

    def max_speed(self) -> float:
        return self.drift.norm() + self.amplitude * 2 * math.pi / self.period

    def start(self) -> Vec3:
        return self.origin


@dataclass(frozen=True)
class SeededRandomWalk:
    """Damped velocity random walk: v' = damping*v + step_stddev*g, clamped.

    Deterministic for a given seed; the per-slot state is reproducible by
    replaying the walk from slot 1. A None seed defers to the run seed
    (resolved by the engine before stepping).
    """

    step_stddev: float
    seed: Optional[int] = None
    damping: float = 0.9
    max_speed: float = 1.0
    planar: bool = True  # confine motion to z = 0
    origin: Vec3 = ZERO

    def __post_init__(self):
        if self.step_stddev < 0:
            raise ConfigurationError("target.step_stddev: must be >= 0")
        if not (0 <= self.damping <= 1):
            raise ConfigurationError("target.damping: must be in [0, 1]")
        if self.max_speed <= 0:
            raise ConfigurationError("target.max_speed: must be > 0")

    def start(self) -> Vec3:
        return self.origin


TargetTrajectory = Union[WaypointLoop, Sinusoid, SeededRandomWalk]

# stream id for walk randomness when the walk seed is derived from a run seed
WALK_STREAM = 2


def _waypoint_arrays(traj: WaypointLoop):
    pts = np.array([p.as_tuple() for p in traj.points], dtype=np.float64)
    n = pts.shape[0]
    seg = np.empty(max(n, 1), dtype=np.float64)
    total = 0.0
    for i in range(n):
        j = (i + 1) % n
        seg[i] = _kernels.dist3(*pts[i], *pts[j])
        total += seg[i]
    return pts, seg, total


def _closed_form_pos(traj: TargetTrajectory, t: int, dt: float) -> Vec3:
    tt = t * dt
    if isinstance(traj, Sinusoid):
        x, y, z = _kernels.sinusoid_pos(
            traj.origin.x,
            traj.origin.y,
            traj.origin.z,
            traj.drift.x,
            traj.drift.y,
            traj.drift.z,
            traj.amplitude,
            traj.period,
            tt,
        )
    else:
        pts, seg, total = _waypoint_arrays(traj)
        x, y, z = _kernels.waypoint_pos(pts, seg, total, traj.speed, tt)
    return Vec3(x, y, z)


def step_target(traj: TargetTrajectory, t: int, dt: float) -> KinematicState:
    """Target state at slot t; per-slot velocity is the discrete displacement/dt.

    Closed-form models evaluate directly; the random walk replays its seeded
    draw sequence from slot 1, so repeated calls are bit-identical.
    """
    if t < 0:
        raise ValueError("step_target: t must be >= 0")
    if dt <= 0:
        raise ValueError("step_target: dt must be > 0")
    if isinstance(traj, SeededRandomWalk):
        if traj.seed is None:
            raise ValueError("step_target: walk seed unresolved (set seed or run via engine)")
        state = make_state(traj.seed)
        px, py, pz = traj.origin.as_tuple()
        vx = vy = vz = 0.0
        for _ in range(t):
            vx, vy, vz = _kernels.walk_step(
                vx,
                vy,
                vz,
                traj.damping,
                traj.step_stddev,
                traj.max_speed,
                1 if traj.planar else 0,
                state,
            )
            px += vx * dt
            py += vy * dt
            pz += vz * dt
        return KinematicState(Vec3(px, py, pz), Vec3(vx, vy, vz))
    pos = _closed_form_pos(traj, t, dt)
    if t == 0:
        return KinematicState(pos, ZERO)
    prev = _closed_form_pos(traj, t - 1, dt)
    vel = Vec3((pos.x - prev.x) / dt, (pos.y - prev.y) / dt, (pos.z - prev.z) / dt)
    return KinematicState(pos, vel)


def step_uav(
    state: KinematicState, cmd: Vec3, dt: float, speed_cap: float
) -> KinematicState:
    """First-order kinematic step: track the commanded velocity under a hard cap."""
    if dt <= 0:
        raise ValueError("step_uav: dt must be > 0")
    if speed_cap <= 0:
        raise ValueError("step_uav: speed_cap must be > 0")
    if not all(math.isfinite(c) for c in cmd.as_tuple()):
        raise ValueError("step_uav: non-finite command")
    vx, vy, vz = _kernels.clamp3(cmd.x, cmd.y, cmd.z, speed_cap)
    vel = Vec3(vx, vy, vz)
    pos = Vec3(
        state.position.x + vx * dt,
        state.position.y + vy * dt,
        state.position.z + vz * dt,
    )
    return KinematicState(pos, vel)


def derived_walk_seed(run_seed: int) -> int:
    """Walk seed used when a scenario leaves the walk seed unset."""
    return substream_seed(run_seed, WALK_STREAM)
