"""Scheduling and execution policies under evaluation.

Three policy axes plug into the engine:

* command execution at the robot: ``latest_only`` (execute the newest queued
  command and purge the rest), ``fifo`` (drain in generation order), or
  ``semce`` (execute the queued command with the best freshness-discounted
  value, discarding anything older than a hard age cutoff);
* sensor-queue ordering at the uplink and edge: arrival order or descending
  importance;
* command transmission rate at the edge: fixed period, or a faster period
  whenever the tracked risk crosses a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from . import _kernels
from .control import CommandPacket
from .errors import ConfigurationError

EXEC_LATEST_ONLY = "latest_only"
EXEC_FIFO = "fifo"
EXEC_SEMCE = "semce"
_EXEC_KINDS = (EXEC_LATEST_ONLY, EXEC_FIFO, EXEC_SEMCE)

TX_FIXED = "fixed"
TX_SEMANTIC_DYNAMIC = "semantic_dynamic"


@dataclass(frozen=True)
class SemCEConfig:
    gamma: float = 0.9  # freshness discount per slot of age
    max_aoi: int = 10  # strictly older packets are discarded unexecuted

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise ConfigurationError(
                f"policy.semce.gamma: must be in (0, 1], got {self.gamma}"
            )
        if self.max_aoi < 0 or self.max_aoi > 100000:
            raise ConfigurationError(
                f"policy.semce.max_aoi: must be in [0, 100000], got {self.max_aoi}"
            )


@dataclass(frozen=True)
class ExecutionPolicy:
    kind: str = EXEC_LATEST_ONLY
    semce: SemCEConfig = field(default_factory=SemCEConfig)

    def __post_init__(self):
        if self.kind not in _EXEC_KINDS:
            raise ConfigurationError(
                f"policy.execution: unknown kind {self.kind!r}, expected one of {_EXEC_KINDS}"
            )

    @classmethod
    def latest_only(cls) -> "ExecutionPolicy":
        return cls(EXEC_LATEST_ONLY)

    @classmethod
    def fifo(cls) -> "ExecutionPolicy":
        return cls(EXEC_FIFO)

    @classmethod
    def semce_policy(cls, gamma: float = 0.9, max_aoi: int = 10) -> "ExecutionPolicy":
        return cls(EXEC_SEMCE, SemCEConfig(gamma, max_aoi))


@dataclass(frozen=True)
class ExecutionDecision:
    """Which queued command to execute; packet_id None means hold the last one."""

    packet_id: Optional[int]

    @property
    def is_hold(self) -> bool:
        return self.packet_id is None


HOLD_LAST = ExecutionDecision(None)


class QueueDiscipline(str, Enum):
    FIFO = "fifo"
    SEMANTIC_PRIORITY = "semantic_priority"


@dataclass(frozen=True)
class TxRatePolicy:
    kind: str = TX_FIXED
    base_period: int = 1
    boost_period: int = 1
    risk_threshold: float = 0.8

    def __post_init__(self):
        if self.kind not in (TX_FIXED, TX_SEMANTIC_DYNAMIC):
            raise ConfigurationError(
                f"policy.tx.kind: unknown kind {self.kind!r}"
            )
        if self.base_period < 1 or self.boost_period < 1:
            raise ConfigurationError("policy.tx: periods must be >= 1")
        if self.boost_period > self.base_period:
            raise ConfigurationError(
                f"policy.tx: boost ({self.boost_period}) must be <= base ({self.base_period})"
            )
        if not (0 <= self.risk_threshold <= 1):
            raise ConfigurationError(
                f"policy.tx.threshold: must be in [0, 1], got {self.risk_threshold}"
            )

    @classmethod
    def fixed(cls, period: int) -> "TxRatePolicy":
        return cls(TX_FIXED, period, period)

    @classmethod
    def semantic_dynamic(
        cls, base: int, boost: int, threshold: float = 0.8
    ) -> "TxRatePolicy":
        return cls(TX_SEMANTIC_DYNAMIC, base, boost, threshold)


def aoi(pkt, t: int) -> int:
    """Age of information in slots at slot t."""
    if t < pkt.generated_slot:
        raise ValueError(
            f"aoi: slot {t} precedes generation slot {pkt.generated_slot}"
        )
    return t - pkt.generated_slot


def semce_score(pkt: CommandPacket, t: int, cfg: SemCEConfig) -> Optional[float]:
    """Freshness-discounted value voi*gamma^age, or None once past max_aoi."""
    age = aoi(pkt, t)
    if age > cfg.max_aoi:
        return None
    return pkt.voi * _kernels.pow_int(cfg.gamma, age)


def select_command(
    queue: List[CommandPacket], t: int, policy: ExecutionPolicy
) -> tuple:
    """Pick the command to execute and prune the queue in place.

    Returns (decision, stale_discards). latest_only empties the queue after
    executing its newest packet; fifo and semce remove only the executed
    packet; semce additionally drops packets past max_aoi while scoring them.
    """
    discarded = 0
    if policy.kind == EXEC_SEMCE:
        kept = [p for p in queue if aoi(p, t) <= policy.semce.max_aoi]
        discarded = len(queue) - len(kept)
        queue[:] = kept
    if not queue:
        return HOLD_LAST, discarded
    if policy.kind == EXEC_LATEST_ONLY:
        chosen = max(queue, key=lambda p: (p.generated_slot, -p.id))
        queue.clear()
    elif policy.kind == EXEC_FIFO:
        chosen = min(queue, key=lambda p: (p.generated_slot, p.id))
        queue.remove(chosen)
    else:
        chosen = max(
            queue,
            key=lambda p: (semce_score(p, t, policy.semce), p.generated_slot, -p.id),
        )
        queue.remove(chosen)
    return ExecutionDecision(chosen.id), discarded


def order_sensor_queue(queue: list, disc: QueueDiscipline, t: int) -> list:
    """Processing order: arrival order for fifo, else descending importance
    with ties to older generation slot then lower id."""
    if disc is QueueDiscipline.FIFO:
        return list(queue)
    return sorted(queue, key=lambda p: (-p.importance, p.generated_slot, p.id))


def risk_proximity(d_t: float, thresholds, d_ref: float) -> float:
    """How close the separation sits to either edge of the tracking band, [0,1]."""
    if not (thresholds.d_s < d_ref <= thresholds.d_e):
        raise ConfigurationError(
            f"control.d_ref: need d_s < d_ref <= d_e, got d_ref={d_ref} "
            f"with d_s={thresholds.d_s}, d_e={thresholds.d_e}"
        )
    if d_t < 0:
        raise ValueError("risk_proximity: distance must be >= 0")
    return _kernels.risk_band(d_t, thresholds.d_s, thresholds.d_e, d_ref)


def sensor_importance(snapshot_distance: float, thresholds, d_ref: float) -> float:
    """Importance of a sensor sample: band-edge proximity of the separation it shows."""
    return risk_proximity(snapshot_distance, thresholds, d_ref)


def tx_gate(policy: TxRatePolicy, t: int, risk: float) -> bool:
    """Emit a command this slot? Periods share phase 0 so switching keeps cadence."""
    if not (0 <= risk <= 1):
        raise ValueError(f"tx_gate: risk must be in [0, 1], got {risk}")
    if policy.kind == TX_SEMANTIC_DYNAMIC and risk >= policy.risk_threshold:
        period = policy.boost_period
    else:
        period = policy.base_period
    return t % period == 0
