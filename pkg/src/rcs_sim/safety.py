"""Per-slot safety constraints: separation distance and speed limits.

Speed limits follow the ISO presets for collaborative and mobile robots
(end effector 0.25 m/s with a human present; mobile platforms 1.2 m/s with
lateral clearance under 500 mm, 0.7 m/s when frontal clearance is also under
500 mm, 0.3 m/s without personnel detection), plus a custom override for
scenarios that set their own cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import ConfigurationError
from .world import KinematicState, distance


class SpeedContextKind(str, Enum):
    END_EFFECTOR_HUMAN_PRESENT = "end_effector_human_present"
    MOBILE_LATERAL_WITHIN_500MM = "mobile_lateral_within_500mm"
    MOBILE_FRONTAL_WITHIN_500MM = "mobile_frontal_within_500mm"
    MOBILE_NO_PERSONNEL_DETECTION = "mobile_no_personnel_detection"
    CUSTOM = "custom"


_ISO_LIMITS = {
    SpeedContextKind.END_EFFECTOR_HUMAN_PRESENT: 0.25,
    SpeedContextKind.MOBILE_LATERAL_WITHIN_500MM: 1.2,
    SpeedContextKind.MOBILE_FRONTAL_WITHIN_500MM: 0.7,
    SpeedContextKind.MOBILE_NO_PERSONNEL_DETECTION: 0.3,
}


@dataclass(frozen=True)
class SpeedLimitContext:
    kind: SpeedContextKind
    custom_limit: Optional[float] = None

    def __post_init__(self):
        if self.kind is SpeedContextKind.CUSTOM:
            if self.custom_limit is None or self.custom_limit <= 0:
                raise ConfigurationError(
                    f"safety.speed_limit: custom limit must be > 0, got {self.custom_limit}"
                )
        elif self.custom_limit is not None:
            raise ConfigurationError(
                "safety.speed_limit: only valid with speed_context = 'custom'"
            )

    @classmethod
    def custom(cls, limit: float) -> "SpeedLimitContext":
        return cls(SpeedContextKind.CUSTOM, limit)


END_EFFECTOR_HUMAN_PRESENT = SpeedLimitContext(SpeedContextKind.END_EFFECTOR_HUMAN_PRESENT)
MOBILE_LATERAL_WITHIN_500MM = SpeedLimitContext(SpeedContextKind.MOBILE_LATERAL_WITHIN_500MM)
MOBILE_FRONTAL_WITHIN_500MM = SpeedLimitContext(SpeedContextKind.MOBILE_FRONTAL_WITHIN_500MM)
MOBILE_NO_PERSONNEL_DETECTION = SpeedLimitContext(
    SpeedContextKind.MOBILE_NO_PERSONNEL_DETECTION
)


def active_speed_limit(ctx: SpeedLimitContext) -> float:
    """Speed cap in m/s for the given operating context."""
    if ctx.kind is SpeedContextKind.CUSTOM:
        return ctx.custom_limit
    return _ISO_LIMITS[ctx.kind]


@dataclass(frozen=True)
class SafetyDistanceRequirement:
    """Minimum separation; fixed, or widened linearly with relative speed.

    reaction_time None means the fixed mode; otherwise the effective distance
    is base_d_s + relative_speed * reaction_time.
    """

    base_d_s: float
    reaction_time: Optional[float] = None

    def __post_init__(self):
        if self.base_d_s <= 0:
            raise ConfigurationError(
                f"safety.base_d_s: must be > 0, got {self.base_d_s}"
            )
        if self.reaction_time is not None and self.reaction_time < 0:
            raise ConfigurationError(
                f"safety.reaction_time: must be >= 0, got {self.reaction_time}"
            )

    @property
    def dynamic(self) -> bool:
        return self.reaction_time is not None


@dataclass(frozen=True)
class SafetyVerdict:
    slot: int
    distance_ok: bool
    speed_ok: bool
    effective_d_s: float
    effective_speed_limit: float


def effective_safety_distance(
    req: SafetyDistanceRequirement, relative_speed: float
) -> float:
    if relative_speed < 0:
        raise ValueError("effective_safety_distance: relative_speed must be >= 0")
    if req.dynamic:
        return req.base_d_s + relative_speed * req.reaction_time
    return req.base_d_s


def check_slot(
    uav: KinematicState,
    target: KinematicState,
    req: SafetyDistanceRequirement,
    ctx: SpeedLimitContext,
    t: int,
) -> SafetyVerdict:
    """Evaluate both safety constraints for one slot."""
    rel = (uav.velocity - target.velocity).norm()
    eff_d = effective_safety_distance(req, rel)
    limit = active_speed_limit(ctx)
    return SafetyVerdict(
        slot=t,
        distance_ok=distance(uav.position, target.position) > eff_d,
        speed_ok=uav.speed() <= limit,
        effective_d_s=eff_d,
        effective_speed_limit=limit,
    )
