"""Scenario files: a flat TOML key tree mapped onto ScenarioConfig.

Unknown keys are rejected with the offending dotted path, so typos fail
loudly instead of silently falling back to defaults. `resolved_dict`
expands every default (standoff distance, initial placement, walk seed,
speed limit) so a run's summary carries everything needed to reproduce it.
"""

from __future__ import annotations

import sys
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import ControllerGains, DEFAULT_COMMAND_SIZE_BITS
from .engine import ScenarioConfig
from .errors import ConfigurationError
from .network import (
    ChannelConfig,
    DeterministicDelay,
    GeometricDelay,
    SENSOR_CATALOG,
    SensorSpec,
)
from .policies import (
    EXEC_SEMCE,
    ExecutionPolicy,
    QueueDiscipline,
    SemCEConfig,
    TX_FIXED,
    TX_SEMANTIC_DYNAMIC,
    TxRatePolicy,
)
from .safety import SafetyDistanceRequirement, SpeedContextKind, SpeedLimitContext
from .world import SeededRandomWalk, Sinusoid, Vec3, WaypointLoop, ZERO


def _check_keys(table: dict, allowed: set, prefix: str) -> None:
    for key in table:
        if key not in allowed:
            path = f"{prefix}.{key}" if prefix else key
            raise ConfigurationError(f"unknown key {path!r}")


def _vec(value, key: str) -> Vec3:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigurationError(f"{key}: expected [x, y, z]")
    return Vec3(float(value[0]), float(value[1]), float(value[2]))


def _delay(table: dict, prefix: str):
    _check_keys(table, {"kind", "k", "p", "cap"}, prefix)
    kind = table.get("kind", "deterministic")
    if kind == "deterministic":
        if "p" in table or "cap" in table:
            raise ConfigurationError(f"{prefix}: p/cap only valid for kind='geometric'")
        return DeterministicDelay(int(table.get("k", 1)))
    if kind == "geometric":
        if "k" in table:
            raise ConfigurationError(f"{prefix}: k only valid for kind='deterministic'")
        if "p" not in table:
            raise ConfigurationError(f"{prefix}.p: required for geometric delay")
        return GeometricDelay(float(table["p"]), int(table.get("cap", 20)))
    raise ConfigurationError(f"{prefix}.kind: unknown delay kind {kind!r}")


def _channel(table: dict, prefix: str) -> ChannelConfig:
    _check_keys(
        table,
        {"capacity_bits", "loss_prob", "queue_capacity", "retransmit", "delay"},
        prefix,
    )
    if "capacity_bits" not in table:
        raise ConfigurationError(f"{prefix}.capacity_bits: required")
    qcap = table.get("queue_capacity", 0)
    return ChannelConfig(
        capacity_bits_per_slot=int(table["capacity_bits"]),
        loss_prob=float(table.get("loss_prob", 0.0)),
        delay=_delay(table.get("delay", {}), f"{prefix}.delay"),
        queue_capacity=None if qcap in (0, None) else int(qcap),
        retransmit_lost=bool(table.get("retransmit", False)),
    )


def _sensor(table: dict, idx: int) -> SensorSpec:
    prefix = f"sensors[{idx}]"
    _check_keys(table, {"name", "frequency_hz", "size_bits", "data_type"}, prefix)
    if "name" not in table or "frequency_hz" not in table:
        raise ConfigurationError(f"{prefix}: name and frequency_hz required")
    name = table["name"]
    freq = float(table["frequency_hz"])
    size = table.get("size_bits")
    if name in SENSOR_CATALOG:
        return SensorSpec.from_catalog(name, freq, None if size is None else int(size))
    if size is None:
        raise ConfigurationError(f"{prefix}.size_bits: required for non-catalog sensor {name!r}")
    return SensorSpec(name, table.get("data_type", "custom"), freq, int(size))


def _target(table: dict):
    kind = table.get("kind", "sinusoid")
    common = {"kind", "start"}
    start = _vec(table["start"], "target.start") if "start" in table else ZERO
    if kind == "sinusoid":
        _check_keys(table, common | {"amplitude", "period", "drift"}, "target")
        drift = _vec(table["drift"], "target.drift") if "drift" in table else ZERO
        return Sinusoid(
            amplitude=float(table.get("amplitude", 0.0)),
            period=float(table.get("period", 1.0)),
            drift=drift,
            origin=start,
        )
    if kind == "waypoint_loop":
        _check_keys(table, common | {"waypoints", "speed"}, "target")
        pts = table.get("waypoints")
        if not isinstance(pts, list) or not pts:
            raise ConfigurationError("target.waypoints: expected a non-empty list of [x, y, z]")
        points = tuple(_vec(p, f"target.waypoints[{i}]") for i, p in enumerate(pts))
        return WaypointLoop(points=points, speed=float(table.get("speed", 0.0)))
    if kind == "random_walk":
        _check_keys(
            table,
            common | {"step_stddev", "walk_seed", "damping", "max_speed", "planar"},
            "target",
        )
        if "step_stddev" not in table:
            raise ConfigurationError("target.step_stddev: required for random_walk")
        return SeededRandomWalk(
            step_stddev=float(table["step_stddev"]),
            seed=int(table["walk_seed"]) if "walk_seed" in table else None,
            damping=float(table.get("damping", 0.9)),
            max_speed=float(table.get("max_speed", 1.0)),
            planar=bool(table.get("planar", True)),
            origin=start,
        )
    raise ConfigurationError(f"target.kind: unknown trajectory kind {kind!r}")


_CONTEXT_NAMES = {k.value: k for k in SpeedContextKind}


def _safety_context(table: dict) -> SpeedLimitContext:
    name = table.get("speed_context", "custom")
    if name not in _CONTEXT_NAMES:
        raise ConfigurationError(
            f"safety.speed_context: unknown context {name!r}, "
            f"expected one of {sorted(_CONTEXT_NAMES)}"
        )
    kind = _CONTEXT_NAMES[name]
    if kind is SpeedContextKind.CUSTOM:
        return SpeedLimitContext.custom(float(table.get("speed_limit", 2.0)))
    if "speed_limit" in table:
        raise ConfigurationError(
            "safety.speed_limit: only valid with speed_context = 'custom'"
        )
    return SpeedLimitContext(kind)


def _safety_distance(table: dict, d_s: float) -> Optional[SafetyDistanceRequirement]:
    mode = table.get("distance_mode", "fixed")
    base = table.get("base_d_s")
    if mode == "fixed":
        if "reaction_time" in table:
            raise ConfigurationError(
                "safety.reaction_time: only valid with distance_mode = 'dynamic'"
            )
        if base is None:
            return None  # engine default: Fixed at thresholds.d_s
        return SafetyDistanceRequirement(float(base))
    if mode == "dynamic":
        return SafetyDistanceRequirement(
            float(base) if base is not None else d_s,
            reaction_time=float(table.get("reaction_time", 0.5)),
        )
    raise ConfigurationError(f"safety.distance_mode: unknown mode {mode!r}")


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed TOML tree."""
    _check_keys(
        data,
        {"seed", "sim", "thresholds", "control", "uplink", "downlink", "sensors",
         "policy", "safety", "target", "initial"},
        "",
    )
    sim = data.get("sim", {})
    _check_keys(sim, {"T", "dt", "warmup"}, "sim")
    thr = data.get("thresholds", {})
    _check_keys(thr, {"d_s", "d_e"}, "thresholds")
    from .world import TrackingThresholds

    thresholds = TrackingThresholds(
        d_s=float(thr.get("d_s", 1.0)), d_e=float(thr.get("d_e", 5.0))
    )

    ctl = data.get("control", {})
    _check_keys(
        ctl, {"kp", "ki", "kd", "d_ref", "voi_weight", "command_size_bits"}, "control"
    )
    d_ref = ctl.get("d_ref", "auto")
    if d_ref == "auto":
        d_ref = None
    elif isinstance(d_ref, (int, float)):
        d_ref = float(d_ref)
    else:
        raise ConfigurationError("control.d_ref: expected a number or 'auto'")

    pol = data.get("policy", {})
    _check_keys(pol, {"execution", "sensor_queue", "semce", "tx"}, "policy")
    semce_tbl = pol.get("semce", {})
    _check_keys(semce_tbl, {"gamma", "max_aoi"}, "policy.semce")
    semce = SemCEConfig(
        gamma=float(semce_tbl.get("gamma", 0.9)),
        max_aoi=int(semce_tbl.get("max_aoi", 10)),
    )
    execution = ExecutionPolicy(pol.get("execution", "latest_only"), semce)
    try:
        sensor_queue = QueueDiscipline(pol.get("sensor_queue", "fifo"))
    except ValueError:
        raise ConfigurationError(
            f"policy.sensor_queue: unknown discipline {pol.get('sensor_queue')!r}"
        ) from None
    tx_tbl = pol.get("tx", {})
    _check_keys(tx_tbl, {"kind", "base", "boost", "threshold"}, "policy.tx")
    tx_kind = tx_tbl.get("kind", "fixed")
    if tx_kind == TX_FIXED:
        if "boost" in tx_tbl or "threshold" in tx_tbl:
            raise ConfigurationError(
                "policy.tx: boost/threshold only valid for kind='semantic_dynamic'"
            )
        tx = TxRatePolicy.fixed(int(tx_tbl.get("base", 1)))
    elif tx_kind == TX_SEMANTIC_DYNAMIC:
        tx = TxRatePolicy.semantic_dynamic(
            int(tx_tbl.get("base", 4)),
            int(tx_tbl.get("boost", 1)),
            float(tx_tbl.get("threshold", 0.8)),
        )
    else:
        raise ConfigurationError(f"policy.tx.kind: unknown kind {tx_kind!r}")

    sensors_tbl = data.get("sensors", [{"name": "uwb", "frequency_hz": 10.0}])
    if not isinstance(sensors_tbl, list):
        raise ConfigurationError("sensors: expected an array of tables")
    sensors = tuple(_sensor(s, i) for i, s in enumerate(sensors_tbl))

    saf = data.get("safety", {})
    _check_keys(
        saf,
        {"speed_context", "speed_limit", "distance_mode", "reaction_time", "base_d_s"},
        "safety",
    )

    init = data.get("initial", {})
    _check_keys(init, {"uav", "uav_velocity"}, "initial")
    uav = init.get("uav", "auto")
    if uav == "auto":
        initial_uav = None
    else:
        initial_uav = _vec(uav, "initial.uav")

    cfg = ScenarioConfig(
        T=int(sim.get("T", 1000)),
        dt=float(sim.get("dt", 0.1)),
        warmup=int(sim.get("warmup", 0)),
        thresholds=thresholds,
        d_ref=d_ref,
        gains=ControllerGains(
            kp=float(ctl.get("kp", 0.5)),
            ki=float(ctl.get("ki", 0.0)),
            kd=float(ctl.get("kd", 0.0)),
        ),
        voi_weight=float(ctl.get("voi_weight", 0.5)),
        command_size_bits=int(ctl.get("command_size_bits", DEFAULT_COMMAND_SIZE_BITS)),
        uplink=_channel(data.get("uplink", {"capacity_bits": 16384}), "uplink"),
        downlink=_channel(data.get("downlink", {"capacity_bits": 2048}), "downlink"),
        sensors=sensors,
        execution=execution,
        sensor_queue=sensor_queue,
        tx=tx,
        speed_context=_safety_context(saf),
        safety=_safety_distance(saf, thresholds.d_s),
        trajectory=_target(data.get("target", {"kind": "sinusoid", "amplitude": 2.0,
                                               "period": 20.0, "drift": [0.5, 0.0, 0.0]})),
        initial_uav=initial_uav,
        initial_uav_velocity=_vec(init["uav_velocity"], "initial.uav_velocity")
        if "uav_velocity" in init
        else ZERO,
        seed=int(data.get("seed", 1)),
    )
    cfg.validate()
    return cfg


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"scenario file: {exc}") from exc
    return config_from_dict(data)


def resolved_dict(cfg: ScenarioConfig) -> dict:
    """Full configuration tree with every default expanded."""

    def vec(v: Vec3):
        return [v.x, v.y, v.z]

    def channel(ch: ChannelConfig) -> dict:
        if isinstance(ch.delay, DeterministicDelay):
            delay = {"kind": "deterministic", "k": ch.delay.slots}
        else:
            delay = {"kind": "geometric", "p": ch.delay.p, "cap": ch.delay.cap}
        return {
            "capacity_bits": ch.capacity_bits_per_slot,
            "loss_prob": ch.loss_prob,
            "queue_capacity": ch.queue_capacity or 0,
            "retransmit": ch.retransmit_lost,
            "delay": delay,
        }

    traj = cfg.trajectory
    if isinstance(traj, Sinusoid):
        target = {
            "kind": "sinusoid",
            "amplitude": traj.amplitude,
            "period": traj.period,
            "drift": vec(traj.drift),
            "start": vec(traj.origin),
        }
    elif isinstance(traj, WaypointLoop):
        target = {
            "kind": "waypoint_loop",
            "waypoints": [vec(p) for p in traj.points],
            "speed": traj.speed,
        }
    else:
        target = {
            "kind": "random_walk",
            "step_stddev": traj.step_stddev,
            "walk_seed": cfg.resolved_walk_seed(),
            "damping": traj.damping,
            "max_speed": traj.max_speed,
            "planar": traj.planar,
            "start": vec(traj.origin),
        }

    req = cfg.resolved_safety()
    safety = {
        "speed_context": cfg.speed_context.kind.value,
        "distance_mode": "dynamic" if req.dynamic else "fixed",
        "base_d_s": req.base_d_s,
    }
    if cfg.speed_context.kind is SpeedContextKind.CUSTOM:
        safety["speed_limit"] = cfg.speed_context.custom_limit
    if req.dynamic:
        safety["reaction_time"] = req.reaction_time

    tx = {"kind": cfg.tx.kind, "base": cfg.tx.base_period}
    if cfg.tx.kind == TX_SEMANTIC_DYNAMIC:
        tx["boost"] = cfg.tx.boost_period
        tx["threshold"] = cfg.tx.risk_threshold

    return {
        "seed": cfg.seed,
        "sim": {"T": cfg.T, "dt": cfg.dt, "warmup": cfg.warmup},
        "thresholds": {"d_s": cfg.thresholds.d_s, "d_e": cfg.thresholds.d_e},
        "control": {
            "kp": cfg.gains.kp,
            "ki": cfg.gains.ki,
            "kd": cfg.gains.kd,
            "d_ref": cfg.resolved_d_ref(),
            "voi_weight": cfg.voi_weight,
            "command_size_bits": cfg.command_size_bits,
        },
        "uplink": channel(cfg.uplink),
        "downlink": channel(cfg.downlink),
        "sensors": [
            {
                "name": s.name,
                "data_type": s.data_type,
                "frequency_hz": s.frequency_hz,
                "size_bits": s.size_bits,
            }
            for s in cfg.sensors
        ],
        "policy": {
            "execution": cfg.execution.kind,
            "sensor_queue": cfg.sensor_queue.value,
            "semce": {
                "gamma": cfg.execution.semce.gamma,
                "max_aoi": cfg.execution.semce.max_aoi,
            },
            "tx": tx,
        },
        "safety": safety,
        "target": target,
        "initial": {
            "uav": vec(cfg.resolved_initial_uav()),
            "uav_velocity": vec(cfg.initial_uav_velocity),
        },
    }
