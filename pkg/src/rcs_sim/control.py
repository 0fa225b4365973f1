"""Edge-side command generation: standoff reference, PID law, VoI tagging.

The controller holds the UAV at a standoff distance d_ref from the estimated
target rather than on top of it, since separations at or below the safety
distance count as unsafe. Commands are velocity vectors; each outgoing packet
carries a value-of-information score used by the downlink scheduling and
execution policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .world import Vec3, ZERO

DEFAULT_COMMAND_SIZE_BITS = 512


@dataclass(frozen=True)
class ControllerGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ConfigurationError(
                f"control: gains must be >= 0, got kp={self.kp}, ki={self.ki}, kd={self.kd}"
            )


@dataclass(frozen=True)
class StandoffPolicy:
    """Desired UAV-target separation; must sit inside the tracking band."""

    d_ref: float

    def __post_init__(self):
        if self.d_ref <= 0:
            raise ConfigurationError(f"control.d_ref: must be > 0, got {self.d_ref}")


@dataclass(frozen=True)
class CommandPacket:
    id: int
    generated_slot: int
    velocity_command: Vec3
    voi: float
    size_bits: int

    def __post_init__(self):
        if self.size_bits <= 0:
            raise ConfigurationError(
                f"control.command_size_bits: must be > 0, got {self.size_bits}"
            )
        if self.voi < 0:
            raise ValueError("CommandPacket.voi must be >= 0")


@dataclass(frozen=True)
class ControllerState:
    integral_error: Vec3 = ZERO
    previous_error: Vec3 = ZERO
    last_estimate_slot: int = 0


def reference_point(uav_pos: Vec3, target_est: Vec3, d_ref: float) -> Vec3:
    """Point at distance d_ref from the target estimate, toward the UAV.

    Coincident positions resolve deterministically to +x of the target.
    """
    if d_ref <= 0:
        raise ValueError("reference_point: d_ref must be > 0")
    offx = uav_pos.x - target_est.x
    offy = uav_pos.y - target_est.y
    offz = uav_pos.z - target_est.z
    n = math.sqrt(offx * offx + offy * offy + offz * offz)
    if n == 0.0:
        return Vec3(target_est.x + d_ref, target_est.y, target_est.z)
    f = d_ref / n
    return Vec3(target_est.x + offx * f, target_est.y + offy * f, target_est.z + offz * f)


def compute_command(
    uav_est: Vec3,
    ref: Vec3,
    gains: ControllerGains,
    st: ControllerState,
    dt: float,
) -> tuple:
    """One PID update: returns (velocity command, advanced ControllerState)."""
    if dt <= 0:
        raise ValueError("compute_command: dt must be > 0")
    for v in (uav_est, ref):
        if not all(math.isfinite(c) for c in v.as_tuple()):
            raise ValueError("compute_command: non-finite input")
    ex = ref.x - uav_est.x
    ey = ref.y - uav_est.y
    ez = ref.z - uav_est.z
    ix = st.integral_error.x + ex * dt
    iy = st.integral_error.y + ey * dt
    iz = st.integral_error.z + ez * dt
    dx = (ex - st.previous_error.x) / dt
    dy = (ey - st.previous_error.y) / dt
    dz = (ez - st.previous_error.z) / dt
    cmd = Vec3(
        gains.kp * ex + gains.ki * ix + gains.kd * dx,
        gains.kp * ey + gains.ki * iy + gains.kd * dy,
        gains.kp * ez + gains.ki * iz + gains.kd * dz,
    )
    new_state = ControllerState(
        integral_error=Vec3(ix, iy, iz),
        previous_error=Vec3(ex, ey, ez),
        last_estimate_slot=st.last_estimate_slot,
    )
    return cmd, new_state


def compute_voi(velocity_command: Vec3, current_error: Vec3, w: float) -> float:
    """Value of information: ||command|| + w * ||tracking error||."""
    if w < 0:
        raise ValueError("compute_voi: weight must be >= 0")
    return velocity_command.norm() + w * current_error.norm()


def make_packet(
    next_id: int,
    t: int,
    cmd: Vec3,
    voi: float,
    size_bits: int = DEFAULT_COMMAND_SIZE_BITS,
) -> CommandPacket:
    return CommandPacket(
        id=next_id, generated_slot=t, velocity_command=cmd, voi=voi, size_bits=size_bits
    )
