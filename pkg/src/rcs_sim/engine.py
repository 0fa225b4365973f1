"""Slot-driven closed-loop engine: scenario config in, per-slot trace out.

Within each slot the order is fixed: (1) sensors emit and enqueue on the
uplink; (2) uplink transmits and delivers, the edge ingests at most one
delivered sample per slot (discipline's top pick) and keeps the freshest as
its target estimate; (3) the transmission gate decides whether the controller
emits a command (standoff reference -> PID -> VoI tag) onto the downlink;
(4) downlink transmits and delivers into the robot queue; (5) the execution
policy picks a command or holds the last one; (6) the speed cap clamps the
command; (7) UAV and target step; (8) distance, status, safety verdict, and
queue depths are recorded.

Runs are pure functions of their ScenarioConfig: identical configs (seed
included) give bit-identical results. Randomness flows through three
per-run splitmix64 streams (uplink, downlink, target walk).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels as K
from ._rng import MASK64, substream_seed
from .control import ControllerGains, DEFAULT_COMMAND_SIZE_BITS
from .errors import ConfigurationError
from .network import (
    ChannelConfig,
    DeterministicDelay,
    GeometricDelay,
    SensorSpec,
)
from .policies import (
    EXEC_FIFO,
    EXEC_LATEST_ONLY,
    EXEC_SEMCE,
    ExecutionPolicy,
    QueueDiscipline,
    TX_SEMANTIC_DYNAMIC,
    TxRatePolicy,
)
from .safety import (
    SafetyDistanceRequirement,
    SafetyVerdict,
    SpeedLimitContext,
    active_speed_limit,
)
from .world import (
    SeededRandomWalk,
    Sinusoid,
    TargetTrajectory,
    TrackingStatus,
    TrackingThresholds,
    Vec3,
    WaypointLoop,
    ZERO,
    step_target,
)

_EXEC_CODE = {EXEC_LATEST_ONLY: 0, EXEC_FIFO: 1, EXEC_SEMCE: 2}


def _default_uplink() -> ChannelConfig:
    return ChannelConfig(capacity_bits_per_slot=16384, loss_prob=0.0)


def _default_downlink() -> ChannelConfig:
    return ChannelConfig(capacity_bits_per_slot=2048, loss_prob=0.0)


def _default_sensors() -> tuple:
    return (SensorSpec.from_catalog("uwb", 10.0),)


def _default_trajectory() -> Sinusoid:
    return Sinusoid(amplitude=2.0, period=20.0, drift=Vec3(0.5, 0.0, 0.0))


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete, seeded description of one experiment."""

    T: int = 1000
    dt: float = 0.1
    warmup: int = 0  # slots excluded from rate metrics
    thresholds: TrackingThresholds = field(
        default_factory=lambda: TrackingThresholds(1.0, 5.0)
    )
    d_ref: Optional[float] = None  # None = midpoint of (d_s, d_e]
    gains: ControllerGains = field(default_factory=lambda: ControllerGains(0.5))
    voi_weight: float = 0.5
    command_size_bits: int = DEFAULT_COMMAND_SIZE_BITS
    uplink: ChannelConfig = field(default_factory=_default_uplink)
    downlink: ChannelConfig = field(default_factory=_default_downlink)
    sensors: tuple = field(default_factory=_default_sensors)
    execution: ExecutionPolicy = field(default_factory=ExecutionPolicy.latest_only)
    sensor_queue: QueueDiscipline = QueueDiscipline.FIFO
    tx: TxRatePolicy = field(default_factory=lambda: TxRatePolicy.fixed(1))
    speed_context: SpeedLimitContext = field(
        default_factory=lambda: SpeedLimitContext.custom(2.0)
    )
    safety: Optional[SafetyDistanceRequirement] = None  # None = Fixed(d_s)
    trajectory: TargetTrajectory = field(default_factory=_default_trajectory)
    initial_uav: Optional[Vec3] = None  # None = standoff point along +x
    initial_uav_velocity: Vec3 = ZERO
    seed: int = 1

    # resolved views ----------------------------------------------------
    def resolved_d_ref(self) -> float:
        if self.d_ref is None:
            return 0.5 * (self.thresholds.d_s + self.thresholds.d_e)
        return self.d_ref

    def resolved_safety(self) -> SafetyDistanceRequirement:
        if self.safety is None:
            return SafetyDistanceRequirement(self.thresholds.d_s)
        return self.safety

    def target_start(self) -> Vec3:
        return self.trajectory.start()

    def resolved_initial_uav(self) -> Vec3:
        """Explicit position, or the standoff point ahead of the target.

        Auto placement puts the UAV at d_ref from the target's start along
        the target's initial motion direction (+x for a parked target), so
        the run opens on-station for any threshold pair.
        """
        if self.initial_uav is not None:
            return self.initial_uav
        s = self.target_start()
        d = self.resolved_d_ref()
        traj = self.trajectory
        if isinstance(traj, SeededRandomWalk) and traj.seed is None:
            traj = replace(traj, seed=self.resolved_walk_seed())
        v = step_target(traj, 1, self.dt).velocity
        n = v.norm()
        if n == 0.0:
            return Vec3(s.x + d, s.y, s.z)
        return Vec3(s.x + v.x / n * d, s.y + v.y / n * d, s.z + v.z / n * d)

    def speed_limit(self) -> float:
        return active_speed_limit(self.speed_context)

    def resolved_walk_seed(self) -> Optional[int]:
        if not isinstance(self.trajectory, SeededRandomWalk):
            return None
        if self.trajectory.seed is not None:
            return self.trajectory.seed & MASK64
        return substream_seed(self.seed & MASK64, 2)

    def validate(self) -> None:
        """Raise ConfigurationError (message names the offending key) if invalid."""
        if self.T < 1:
            raise ConfigurationError(f"sim.T: must be >= 1, got {self.T}")
        if not (self.dt > 0) or not math.isfinite(self.dt):
            raise ConfigurationError(f"sim.dt: must be > 0, got {self.dt}")
        if not (0 <= self.warmup < self.T):
            raise ConfigurationError(
                f"sim.warmup: must be in [0, T), got {self.warmup} with T={self.T}"
            )
        d_ref = self.resolved_d_ref()
        if not (self.thresholds.d_s < d_ref <= self.thresholds.d_e):
            raise ConfigurationError(
                f"control.d_ref: need d_s < d_ref <= d_e, got {d_ref} with "
                f"d_s={self.thresholds.d_s}, d_e={self.thresholds.d_e}"
            )
        if self.voi_weight < 0:
            raise ConfigurationError(
                f"control.voi_weight: must be >= 0, got {self.voi_weight}"
            )
        if self.command_size_bits <= 0:
            raise ConfigurationError(
                f"control.command_size_bits: must be > 0, got {self.command_size_bits}"
            )
        if self.command_size_bits > self.downlink.capacity_bits_per_slot:
            raise ConfigurationError(
                "downlink.capacity_bits: smaller than one command packet"
            )
        if not self.sensors:
            raise ConfigurationError("sensors: need at least one sensor")
        for spec in self.sensors:
            if self.dt * spec.frequency_hz > 1.0 + 1e-9:
                raise ConfigurationError(
                    f"sensors.frequency_hz: {spec.frequency_hz} Hz emits more than "
                    f"one packet per {self.dt}s slot"
                )
            if spec.size_bits > self.uplink.capacity_bits_per_slot:
                raise ConfigurationError(
                    f"uplink.capacity_bits: smaller than one {spec.name} packet"
                )
        if self.downlink.retransmit_lost:
            raise ConfigurationError(
                "downlink.retransmit: retransmission applies to sensor packets only"
            )
        if isinstance(self.trajectory, SeededRandomWalk):
            cap = self.speed_limit()
            if self.trajectory.max_speed > 10 * cap:
                raise ConfigurationError(
                    "target.max_speed: implausibly above the UAV speed limit"
                )


@dataclass(frozen=True)
class SlotRecord:
    t: int
    d_t: float
    status: TrackingStatus
    executed_id: Optional[int]
    aoi_executed: Optional[int]
    voi_executed: Optional[float]
    verdict: SafetyVerdict
    risk: float
    uplink_queue_depth: int
    edge_backlog_depth: int
    downlink_pending_depth: int
    downlink_queue_depth: int  # robot-side execution queue, end of slot


@dataclass(frozen=True)
class MetricsSummary:
    safety_rate: float
    tracking_success_rate: float
    mean_abs_distance_error: float  # mean |d_t - d_ref| over counted slots
    mean_aoi_executed: float  # 0.0 when no command was executed
    max_aoi_executed: int
    unsafe_slots: int
    successful_slots: int
    unsuccessful_slots: int
    executed_commands: int
    hold_slots: int
    counters: dict  # whole-run packet accounting (both links)
    T: int
    counted_slots: int
    warmup: int

    def to_dict(self) -> dict:
        out = {
            "safety_rate": self.safety_rate,
            "tracking_success_rate": self.tracking_success_rate,
            "mean_abs_distance_error": self.mean_abs_distance_error,
            "mean_aoi_executed": self.mean_aoi_executed,
            "max_aoi_executed": self.max_aoi_executed,
            "unsafe_slots": self.unsafe_slots,
            "successful_slots": self.successful_slots,
            "unsuccessful_slots": self.unsuccessful_slots,
            "executed_commands": self.executed_commands,
            "hold_slots": self.hold_slots,
            "T": self.T,
            "counted_slots": self.counted_slots,
            "warmup": self.warmup,
        }
        out["counters"] = dict(self.counters)
        return out


def safety_rate(unsafe_slots: int, total_slots: int) -> float:
    """Fraction of slots not in the unsafe band: (T - unsafe) / T."""
    if total_slots < 1:
        raise ValueError("safety_rate: total_slots must be >= 1")
    return (total_slots - unsafe_slots) / total_slots


def tracking_success_rate(successful_slots: int, total_slots: int) -> float:
    """Fraction of slots with separation inside (d_s, d_e]."""
    if total_slots < 1:
        raise ValueError("tracking_success_rate: total_slots must be >= 1")
    return successful_slots / total_slots


_COUNTER_NAMES = {
    "uplink_generated": K.CN_UP_GENERATED,
    "uplink_enqueued": K.CN_UP_ENQUEUED,
    "uplink_sent": K.CN_UP_SENT,
    "uplink_lost": K.CN_UP_LOST,
    "uplink_dropped": K.CN_UP_DROPPED,
    "uplink_delivered": K.CN_UP_DELIVERED,
    "uplink_pending_end": K.CN_UP_PENDING_END,
    "uplink_in_flight_end": K.CN_UP_INFLIGHT_END,
    "downlink_generated": K.CN_DN_GENERATED,
    "downlink_enqueued": K.CN_DN_ENQUEUED,
    "downlink_sent": K.CN_DN_SENT,
    "downlink_lost": K.CN_DN_LOST,
    "downlink_dropped": K.CN_DN_DROPPED,
    "downlink_delivered": K.CN_DN_DELIVERED,
    "downlink_pending_end": K.CN_DN_PENDING_END,
    "downlink_in_flight_end": K.CN_DN_INFLIGHT_END,
    "edge_ingested": K.CN_EDGE_INGESTED,
    "edge_stale_discarded": K.CN_EDGE_STALE_DISCARDED,
    "semce_discarded": K.CN_SEMCE_DISCARDED,
    "latest_purged": K.CN_LATEST_PURGED,
    "robot_queue_end": K.CN_ROBOT_QUEUE_END,
    "edge_backlog_end": K.CN_EDGE_BACKLOG_END,
}


@dataclass(frozen=True)
class RunResult:
    """Config echo, per-slot trace arrays, and the metric summary."""

    config: ScenarioConfig
    d_t: np.ndarray
    status: np.ndarray
    executed_id: np.ndarray  # -1 = held
    aoi_executed: np.ndarray  # -1 = held
    voi_executed: np.ndarray  # nan = held
    risk: np.ndarray
    distance_ok: np.ndarray
    speed_ok: np.ndarray
    effective_d_s: np.ndarray
    uav_speed: np.ndarray
    uplink_queue_depth: np.ndarray
    edge_backlog_depth: np.ndarray
    downlink_pending_depth: np.ndarray
    downlink_queue_depth: np.ndarray
    uav_position: np.ndarray
    target_position: np.ndarray
    summary: MetricsSummary

    def slot_records(self) -> List[SlotRecord]:
        limit = self.config.speed_limit()
        out = []
        for i in range(self.config.T):
            t = i + 1
            held = self.executed_id[i] < 0
            out.append(
                SlotRecord(
                    t=t,
                    d_t=float(self.d_t[i]),
                    status=TrackingStatus(int(self.status[i])),
                    executed_id=None if held else int(self.executed_id[i]),
                    aoi_executed=None if held else int(self.aoi_executed[i]),
                    voi_executed=None if held else float(self.voi_executed[i]),
                    verdict=SafetyVerdict(
                        slot=t,
                        distance_ok=bool(self.distance_ok[i]),
                        speed_ok=bool(self.speed_ok[i]),
                        effective_d_s=float(self.effective_d_s[i]),
                        effective_speed_limit=limit,
                    ),
                    risk=float(self.risk[i]),
                    uplink_queue_depth=int(self.uplink_queue_depth[i]),
                    edge_backlog_depth=int(self.edge_backlog_depth[i]),
                    downlink_pending_depth=int(self.downlink_pending_depth[i]),
                    downlink_queue_depth=int(self.downlink_queue_depth[i]),
                )
            )
        return out

    def digest(self) -> str:
        """sha256 over every trace array; equal digests = identical runs."""
        h = hashlib.sha256()
        for arr in (
            self.d_t,
            self.status,
            self.executed_id,
            self.aoi_executed,
            self.voi_executed,
            self.risk,
            self.distance_ok,
            self.speed_ok,
            self.effective_d_s,
            self.uav_speed,
            self.uplink_queue_depth,
            self.edge_backlog_depth,
            self.downlink_pending_depth,
            self.downlink_queue_depth,
            self.uav_position,
            self.target_position,
        ):
            h.update(arr.tobytes())
        return h.hexdigest()


def _pack(cfg: ScenarioConfig):
    ip = np.zeros(K.IP_COUNT, dtype=np.int64)
    fp = np.zeros(K.FP_COUNT, dtype=np.float64)
    ip[K.IP_T] = cfg.T
    ip[K.IP_N_SENSORS] = len(cfg.sensors)
    ip[K.IP_EXEC] = _EXEC_CODE[cfg.execution.kind]
    ip[K.IP_SENSOR_DISC] = 0 if cfg.sensor_queue is QueueDiscipline.FIFO else 1
    ip[K.IP_TX_KIND] = 1 if cfg.tx.kind == TX_SEMANTIC_DYNAMIC else 0
    ip[K.IP_TX_BASE] = cfg.tx.base_period
    ip[K.IP_TX_BOOST] = cfg.tx.boost_period
    ip[K.IP_SEMCE_MAX_AOI] = cfg.execution.semce.max_aoi
    ip[K.IP_CMD_SIZE_BITS] = cfg.command_size_bits
    ip[K.IP_UP_CAPACITY] = cfg.uplink.capacity_bits_per_slot
    ip[K.IP_DN_CAPACITY] = cfg.downlink.capacity_bits_per_slot
    ip[K.IP_UP_QCAP] = cfg.uplink.queue_capacity or 0
    ip[K.IP_DN_QCAP] = cfg.downlink.queue_capacity or 0
    ip[K.IP_UP_RETRANSMIT] = 1 if cfg.uplink.retransmit_lost else 0

    for prefix, ch in (("UP", cfg.uplink), ("DN", cfg.downlink)):
        if isinstance(ch.delay, DeterministicDelay):
            ip[getattr(K, f"IP_{prefix}_DELAY_KIND")] = 0
            ip[getattr(K, f"IP_{prefix}_DELAY_K")] = ch.delay.slots
            ip[getattr(K, f"IP_{prefix}_DELAY_CAP")] = 0
        else:
            ip[getattr(K, f"IP_{prefix}_DELAY_KIND")] = 1
            ip[getattr(K, f"IP_{prefix}_DELAY_CAP")] = ch.delay.cap
            fp[getattr(K, f"FP_{prefix}_GEO_P")] = ch.delay.p

    fp[K.FP_DT] = cfg.dt
    fp[K.FP_DS] = cfg.thresholds.d_s
    fp[K.FP_DE] = cfg.thresholds.d_e
    fp[K.FP_DREF] = cfg.resolved_d_ref()
    fp[K.FP_KP] = cfg.gains.kp
    fp[K.FP_KI] = cfg.gains.ki
    fp[K.FP_KD] = cfg.gains.kd
    fp[K.FP_VOI_W] = cfg.voi_weight
    fp[K.FP_GAMMA] = cfg.execution.semce.gamma
    fp[K.FP_TX_RISK_THRESHOLD] = cfg.tx.risk_threshold
    fp[K.FP_UP_LOSS] = cfg.uplink.loss_prob
    fp[K.FP_DN_LOSS] = cfg.downlink.loss_prob
    fp[K.FP_SPEED_LIMIT] = cfg.speed_limit()
    req = cfg.resolved_safety()
    fp[K.FP_SAFETY_BASE_DS] = req.base_d_s
    ip[K.IP_SAFETY_DYNAMIC] = 1 if req.dynamic else 0
    fp[K.FP_SAFETY_REACTION] = req.reaction_time or 0.0

    traj = cfg.trajectory
    waypoints = np.zeros((1, 3), dtype=np.float64)
    if isinstance(traj, WaypointLoop):
        ip[K.IP_TRAJ_KIND] = 0
        waypoints = np.array([p.as_tuple() for p in traj.points], dtype=np.float64)
        fp[K.FP_TRAJ_SPEED] = traj.speed
    elif isinstance(traj, Sinusoid):
        ip[K.IP_TRAJ_KIND] = 1
        fp[K.FP_TRAJ_AMPLITUDE] = traj.amplitude
        fp[K.FP_TRAJ_PERIOD] = traj.period
        fp[K.FP_TRAJ_DRIFT_X] = traj.drift.x
        fp[K.FP_TRAJ_DRIFT_Y] = traj.drift.y
        fp[K.FP_TRAJ_DRIFT_Z] = traj.drift.z
    else:
        ip[K.IP_TRAJ_KIND] = 2
        fp[K.FP_TRAJ_STDDEV] = traj.step_stddev
        fp[K.FP_TRAJ_DAMPING] = traj.damping
        fp[K.FP_TRAJ_MAX_SPEED] = traj.max_speed
        ip[K.IP_TRAJ_PLANAR] = 1 if traj.planar else 0

    ts = cfg.target_start()
    fp[K.FP_TSTART_X] = ts.x
    fp[K.FP_TSTART_Y] = ts.y
    fp[K.FP_TSTART_Z] = ts.z
    us = cfg.resolved_initial_uav()
    fp[K.FP_USTART_X] = us.x
    fp[K.FP_USTART_Y] = us.y
    fp[K.FP_USTART_Z] = us.z
    fp[K.FP_UVEL_X] = cfg.initial_uav_velocity.x
    fp[K.FP_UVEL_Y] = cfg.initial_uav_velocity.y
    fp[K.FP_UVEL_Z] = cfg.initial_uav_velocity.z

    seed = cfg.seed & MASK64
    seeds = np.zeros(3, dtype=np.uint64)
    seeds[0] = np.uint64(substream_seed(seed, 0))
    seeds[1] = np.uint64(substream_seed(seed, 1))
    walk_seed = cfg.resolved_walk_seed()
    seeds[2] = np.uint64(walk_seed if walk_seed is not None else 0)

    sensor_freq = np.array([s.frequency_hz for s in cfg.sensors], dtype=np.float64)
    sensor_size = np.array([s.size_bits for s in cfg.sensors], dtype=np.int64)
    return ip, fp, seeds, sensor_freq, sensor_size, waypoints


_ERR_MESSAGES = {
    K.ERR_UPLINK_CONSERVATION: "uplink queue conservation violated",
    K.ERR_DOWNLINK_CONSERVATION: "downlink queue conservation violated",
    K.ERR_QUEUE_OVERFLOW: "internal queue capacity exceeded",
}


def run(cfg: ScenarioConfig) -> RunResult:
    """Execute one run; deterministic in cfg (seed included)."""
    cfg.validate()
    ip, fp, seeds, sensor_freq, sensor_size, waypoints = _pack(cfg)
    T = cfg.T
    d_arr = np.zeros(T)
    status = np.zeros(T, dtype=np.int64)
    exec_id = np.zeros(T, dtype=np.int64)
    exec_aoi = np.zeros(T, dtype=np.int64)
    exec_voi = np.zeros(T)
    risk = np.zeros(T)
    dist_ok = np.zeros(T, dtype=np.int64)
    speed_ok = np.zeros(T, dtype=np.int64)
    eff_ds = np.zeros(T)
    uspeed = np.zeros(T)
    qd_up = np.zeros(T, dtype=np.int64)
    qd_edge = np.zeros(T, dtype=np.int64)
    qd_dn = np.zeros(T, dtype=np.int64)
    qd_robot = np.zeros(T, dtype=np.int64)
    upos = np.zeros((T, 3))
    tpos = np.zeros((T, 3))
    counters = np.zeros(K.CN_COUNT, dtype=np.int64)

    code = K.run_loop(
        ip,
        fp,
        seeds,
        sensor_freq,
        sensor_size,
        waypoints,
        d_arr,
        status,
        exec_id,
        exec_aoi,
        exec_voi,
        risk,
        dist_ok,
        speed_ok,
        eff_ds,
        uspeed,
        qd_up,
        qd_edge,
        qd_dn,
        qd_robot,
        upos,
        tpos,
        counters,
    )
    if code != K.ERR_OK:
        raise RuntimeError(f"engine: {_ERR_MESSAGES.get(int(code), 'unknown error')}")

    w = cfg.warmup
    counted = T - w
    st = status[w:]
    unsafe = int(np.count_nonzero(st == 0))
    succ = int(np.count_nonzero(st == 1))
    unsucc = int(np.count_nonzero(st == 2))
    d_err = np.abs(d_arr[w:] - cfg.resolved_d_ref())
    aoi_w = exec_aoi[w:]
    aoi_vals = aoi_w[aoi_w >= 0]
    summary = MetricsSummary(
        safety_rate=safety_rate(unsafe, counted),
        tracking_success_rate=tracking_success_rate(succ, counted),
        mean_abs_distance_error=float(d_err.mean()),
        mean_aoi_executed=float(aoi_vals.mean()) if aoi_vals.size else 0.0,
        max_aoi_executed=int(aoi_vals.max()) if aoi_vals.size else 0,
        unsafe_slots=unsafe,
        successful_slots=succ,
        unsuccessful_slots=unsucc,
        executed_commands=int(aoi_vals.size),
        hold_slots=counted - int(aoi_vals.size),
        counters={name: int(counters[idx]) for name, idx in _COUNTER_NAMES.items()},
        T=T,
        counted_slots=counted,
        warmup=w,
    )
    return RunResult(
        config=cfg,
        d_t=d_arr,
        status=status,
        executed_id=exec_id,
        aoi_executed=exec_aoi,
        voi_executed=exec_voi,
        risk=risk,
        distance_ok=dist_ok,
        speed_ok=speed_ok,
        effective_d_s=eff_ds,
        uav_speed=uspeed,
        uplink_queue_depth=qd_up,
        edge_backlog_depth=qd_edge,
        downlink_pending_depth=qd_dn,
        downlink_queue_depth=qd_robot,
        uav_position=upos,
        target_position=tpos,
        summary=summary,
    )


AGGREGATE_METRICS = (
    "safety_rate",
    "tracking_success_rate",
    "mean_abs_distance_error",
    "mean_aoi_executed",
    "max_aoi_executed",
)


@dataclass(frozen=True)
class MetricAggregate:
    mean: float
    std: float  # population standard deviation (one seed -> 0.0)


@dataclass(frozen=True)
class BatchResult:
    results: List[RunResult]
    aggregate: dict  # metric name -> MetricAggregate


def run_batch(cfg: ScenarioConfig, seeds: Sequence[int]) -> BatchResult:
    """One run per seed (seed replaces cfg.seed); order-independent aggregates."""
    if not seeds:
        raise ConfigurationError("seeds: need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("seeds: duplicate seeds")
    results = [run(replace(cfg, seed=s)) for s in seeds]
    agg = {}
    for name in AGGREGATE_METRICS:
        vals = np.array([getattr(r.summary, name) for r in results], dtype=np.float64)
        agg[name] = MetricAggregate(mean=float(vals.mean()), std=float(vals.std()))
    return BatchResult(results=results, aggregate=agg)
