"""Deterministic simulator of a wirelessly-connected robotic control loop.

Sensors observe a moving target, an impaired uplink carries the samples to an
edge controller, and an impaired downlink carries velocity commands back to a
UAV that must hold its separation from the target inside a tracking band.
The package exists to compare semantic packet-scheduling policies (value- and
age-aware command execution, importance-ordered sensor queues, risk-adaptive
transmission rates) against bit-level baselines on safety and tracking
metrics.
"""

from ._dispatch import NUMBA_ENABLED
from .engine import (
    BatchResult,
    MetricsSummary,
    RunResult,
    ScenarioConfig,
    SlotRecord,
    run,
    run_batch,
    safety_rate,
    tracking_success_rate,
)
from .errors import ConfigurationError

__version__ = "0.1.0"

__all__ = [
    "BatchResult",
    "ConfigurationError",
    "MetricsSummary",
    "NUMBA_ENABLED",
    "RunResult",
    "ScenarioConfig",
    "SlotRecord",
    "run",
    "run_batch",
    "safety_rate",
    "tracking_success_rate",
    "__version__",
]
