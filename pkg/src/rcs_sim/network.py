"""Impaired wireless links and the sensor traffic they carry.

A link has per-slot bit capacity, Bernoulli loss applied per transmission
attempt, and a delay of at least one slot (deterministic or truncated
geometric), so a packet is never consumable in its send slot. Queues carry
conservation counters audited every slot:

    enqueued = sent + dropped + pending
    sent     = lost + in_flight + delivered

The sensor catalog lists common robot-embedded and external sensors with
their transmission-frequency ranges and data-load classes; data-load classes
map to per-packet payload sizes in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from ._rng import geometric, uniform
from .errors import ConfigurationError
from .policies import QueueDiscipline
from .world import KinematicState

DATA_LOAD_BITS = {
    "low": 512,
    "low-medium": 4096,
    "medium": 65536,
    "medium-high": 1048576,
    "high": 8388608,
}

# name -> (data type, (min Hz, max Hz), data-load class)
SENSOR_CATALOG = {
    "tactile": ("haptic", (100.0, 1000.0), "low-medium"),
    "torque": ("force/torque", (500.0, 2000.0), "low-medium"),
    "joint_encoder": ("joint angles/velocities", (500.0, 1000.0), "low"),
    "imu": ("acceleration, angular velocity", (100.0, 1000.0), "low-medium"),
    "magnetometer": ("heading", (10.0, 100.0), "low"),
    "depth_camera": ("depth image", (10.0, 60.0), "medium-high"),
    "lidar": ("3d point cloud", (5.0, 20.0), "high"),
    "ultrasonic": ("distance", (1.0, 50.0), "low"),
    "uwb": ("radio signal", (10.0, 100.0), "low"),
    "wifi": ("radio signal", (1.0, 10.0), "low"),
    "infrared": ("thermal imaging", (1.0, 60.0), "medium"),
}


@dataclass(frozen=True)
class SensorSpec:
    name: str
    data_type: str
    frequency_hz: float
    size_bits: int

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ConfigurationError(
                f"sensors.frequency_hz: must be > 0, got {self.frequency_hz}"
            )
        if self.size_bits <= 0:
            raise ConfigurationError(
                f"sensors.size_bits: must be > 0, got {self.size_bits}"
            )

    @classmethod
    def from_catalog(
        cls, name: str, frequency_hz: float, size_bits: Optional[int] = None
    ) -> "SensorSpec":
        """Build a spec for a catalog sensor, enforcing its frequency range."""
        if name not in SENSOR_CATALOG:
            raise ConfigurationError(
                f"sensors.name: {name!r} not in catalog {sorted(SENSOR_CATALOG)}"
            )
        data_type, (lo, hi), load = SENSOR_CATALOG[name]
        if not (lo <= frequency_hz <= hi):
            raise ConfigurationError(
                f"sensors.frequency_hz: {frequency_hz} outside {name} range [{lo}, {hi}]"
            )
        return cls(name, data_type, frequency_hz, size_bits or DATA_LOAD_BITS[load])


@dataclass(frozen=True)
class SensorPacket:
    id: int
    generated_slot: int
    sensor: str
    payload: KinematicState  # observed target state
    size_bits: int
    importance: float

    def __post_init__(self):
        if self.importance < 0:
            raise ValueError("SensorPacket.importance must be >= 0")


@dataclass(frozen=True)
class DeterministicDelay:
    slots: int = 1

    def __post_init__(self):
        if self.slots < 0:
            raise ConfigurationError(f"delay.k: must be >= 0, got {self.slots}")


@dataclass(frozen=True)
class GeometricDelay:
    p: float
    cap: int = 20

    def __post_init__(self):
        if not (0 < self.p <= 1):
            raise ConfigurationError(f"delay.p: must be in (0, 1], got {self.p}")
        if self.cap < 1:
            raise ConfigurationError(f"delay.cap: must be >= 1, got {self.cap}")


DelayModel = Union[DeterministicDelay, GeometricDelay]


@dataclass(frozen=True)
class ChannelConfig:
    capacity_bits_per_slot: int
    loss_prob: float = 0.0
    delay: DelayModel = DeterministicDelay(1)
    queue_capacity: Optional[int] = None  # None = unbounded
    retransmit_lost: bool = False

    def __post_init__(self):
        if self.capacity_bits_per_slot <= 0:
            raise ConfigurationError(
                f"capacity_bits: must be > 0, got {self.capacity_bits_per_slot}"
            )
        if not (0 <= self.loss_prob <= 1):
            raise ConfigurationError(
                f"loss_prob: must be in [0, 1], got {self.loss_prob}"
            )
        if self.queue_capacity is not None and self.queue_capacity < 1:
            raise ConfigurationError(
                f"queue_capacity: must be >= 1 (or unset), got {self.queue_capacity}"
            )


def sample_delay(delay: DelayModel, rng_state: np.ndarray) -> int:
    """Delay in slots, always >= 1 so arrivals land strictly after the send slot."""
    if isinstance(delay, DeterministicDelay):
        return max(1, delay.slots)
    return int(geometric(rng_state, delay.p, delay.cap))


@dataclass
class InFlight:
    packet: object
    arrival_slot: int


def _weight(pkt) -> float:
    """Semantic ordering weight: sensor importance, or command VoI."""
    w = getattr(pkt, "importance", None)
    if w is None:
        w = getattr(pkt, "voi", 0.0)
    return w


class LinkQueue:
    """Transmit-side queue plus in-flight tracking for one link direction."""

    def __init__(self, queue_capacity: Optional[int] = None):
        self.queue_capacity = queue_capacity
        self._pending: List[tuple] = []  # (seq, packet)
        self._in_flight: List[InFlight] = []
        self._seq = 0
        self.enqueued = 0
        self.sent = 0
        self.lost = 0
        self.dropped = 0
        self.delivered = 0

    # ordering ---------------------------------------------------------
    def _order_key(self, entry, disc: QueueDiscipline):
        seq, pkt = entry
        if disc is QueueDiscipline.FIFO:
            return (seq,)
        return (-_weight(pkt), pkt.generated_slot, pkt.id)

    def _drop_key(self, entry, disc: QueueDiscipline):
        # the drop victim is the packet the discipline would process last
        seq, pkt = entry
        if disc is QueueDiscipline.FIFO:
            return (-seq,)  # newest
        return (_weight(pkt), -pkt.generated_slot, -pkt.id)

    # operations -------------------------------------------------------
    def enqueue(self, pkt, disc: QueueDiscipline = QueueDiscipline.FIFO) -> None:
        self._seq += 1
        self._pending.append((self._seq, pkt))
        self.enqueued += 1
        if self.queue_capacity is not None and len(self._pending) > self.queue_capacity:
            victim = min(self._pending, key=lambda e: self._drop_key(e, disc))
            self._pending.remove(victim)
            self.dropped += 1

    def transmit(
        self,
        channel: ChannelConfig,
        disc: QueueDiscipline,
        t: int,
        rng_state: np.ndarray,
    ) -> List[InFlight]:
        """Send pending packets in discipline order within this slot's capacity.

        Stops at the first packet that does not fit (strict prefix of the
        order). Each attempt consumes capacity; losses happen after dequeue.
        One uniform draw per attempt, one more per geometric delay.
        """
        budget = channel.capacity_bits_per_slot
        started = []
        while self._pending:
            entry = min(self._pending, key=lambda e: self._order_key(e, disc))
            pkt = entry[1]
            if pkt.size_bits > budget:
                break
            budget -= pkt.size_bits
            self._pending.remove(entry)
            self.sent += 1
            if uniform(rng_state) < channel.loss_prob:
                self.lost += 1
                if channel.retransmit_lost:
                    self._seq += 1
                    self._pending.append((self._seq, pkt))
                    self.enqueued += 1
            else:
                flight = InFlight(pkt, t + sample_delay(channel.delay, rng_state))
                self._in_flight.append(flight)
                started.append(flight)
        return started

    def deliveries_at(self, t: int) -> list:
        """Remove and return packets arriving exactly at slot t, by (gen, id)."""
        due = [f for f in self._in_flight if f.arrival_slot == t]
        for f in due:
            self._in_flight.remove(f)
        due.sort(key=lambda f: (f.packet.generated_slot, f.packet.id))
        self.delivered += len(due)
        return [f.packet for f in due]

    # accounting -------------------------------------------------------
    @property
    def pending_count(self) -> int:
        return len(self._pending)

    @property
    def in_flight_count(self) -> int:
        return len(self._in_flight)

    def audit(self) -> None:
        """Raise if the conservation counters no longer balance."""
        if self.enqueued != self.sent + self.dropped + self.pending_count:
            raise RuntimeError(
                f"queue conservation violated: enqueued={self.enqueued} != "
                f"sent={self.sent} + dropped={self.dropped} + pending={self.pending_count}"
            )
        if self.sent != self.lost + self.in_flight_count + self.delivered:
            raise RuntimeError(
                f"link conservation violated: sent={self.sent} != "
                f"lost={self.lost} + in_flight={self.in_flight_count} + "
                f"delivered={self.delivered}"
            )


class SensorSource:
    """Phase-accumulator emitter: one packet each time the accumulator crosses
    the sensor period. Requires dt * frequency <= 1 (at most one per slot)."""

    def __init__(self, spec: SensorSpec, dt: float):
        if dt * spec.frequency_hz > 1.0 + 1e-9:
            raise ConfigurationError(
                f"sensors.frequency_hz: {spec.frequency_hz} Hz emits more than one "
                f"packet per {dt}s slot"
            )
        self.spec = spec
        self._period = 1.0 / spec.frequency_hz
        self._acc = 0.0

    def emit(
        self,
        target_state: KinematicState,
        t: int,
        dt: float,
        packet_id: int,
        importance: float,
    ) -> Optional[SensorPacket]:
        """Advance one slot; return a packet when the phase wraps, else None."""
        self._acc += dt
        if self._acc + 1e-9 >= self._period:
            self._acc -= self._period
            return SensorPacket(
                id=packet_id,
                generated_slot=t,
                sensor=self.spec.name,
                payload=target_state,
                size_bits=self.spec.size_bits,
                importance=importance,
            )
        return None
