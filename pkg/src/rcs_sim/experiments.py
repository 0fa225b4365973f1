"""Multi-run experiment machinery: sweeps, policy comparisons, calibration.

Sweeps vary one scenario variable over a value list and run every requested
execution policy at every point with a common seed list. When thresholds are
swept, an automatic standoff distance re-resolves to the new band midpoint;
an explicit one that falls outside the swept band is a configuration error.

Results are assembled in deterministic (policy, value, seed) order no matter
how workers finish.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .engine import AGGREGATE_METRICS, ScenarioConfig, run
from .errors import ConfigurationError
from .policies import (
    EXEC_FIFO,
    EXEC_LATEST_ONLY,
    EXEC_SEMCE,
    ExecutionPolicy,
    TX_FIXED,
    TxRatePolicy,
)
from .world import TrackingThresholds

JOBS_ENV = "RCS_SIM_JOBS"

SWEEP_VARIABLES = ("d_s", "d_e", "loss_prob", "gamma", "base_period")

POLICY_NAMES = (EXEC_LATEST_ONLY, EXEC_FIFO, EXEC_SEMCE)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigurationError(
                f"sweep: unknown variable {self.variable!r}, expected one of {SWEEP_VARIABLES}"
            )
        if not self.values:
            raise ConfigurationError("sweep: empty value list")


def parse_sweep(spec: str) -> SweepSpec:
    """Parse 'var=a,b,c' or 'var=start:stop:step' (stop inclusive)."""
    if "=" not in spec:
        raise ConfigurationError(f"sweep: expected VAR=VALUES, got {spec!r}")
    var, _, rhs = spec.partition("=")
    var = var.strip()
    rhs = rhs.strip()
    try:
        if ":" in rhs:
            parts = [float(x) for x in rhs.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0:
                raise ValueError
            values = []
            v = start
            while v <= stop + 1e-9:
                values.append(round(v, 10))
                v += step
        else:
            values = [float(x) for x in rhs.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"sweep: cannot parse values {rhs!r}") from None
    return SweepSpec(var, tuple(values))


def apply_sweep_value(cfg: ScenarioConfig, variable: str, value: float) -> ScenarioConfig:
    if variable == "d_s":
        out = replace(cfg, thresholds=TrackingThresholds(float(value), cfg.thresholds.d_e))
    elif variable == "d_e":
        out = replace(cfg, thresholds=TrackingThresholds(cfg.thresholds.d_s, float(value)))
    elif variable == "loss_prob":
        out = replace(cfg, downlink=replace(cfg.downlink, loss_prob=float(value)))
    elif variable == "gamma":
        semce = replace(cfg.execution.semce, gamma=float(value))
        out = replace(cfg, execution=replace(cfg.execution, semce=semce))
    elif variable == "base_period":
        period = int(value)
        if cfg.tx.kind == TX_FIXED:
            out = replace(cfg, tx=TxRatePolicy.fixed(period))
        else:
            out = replace(cfg, tx=replace(cfg.tx, base_period=period))
    else:
        raise ConfigurationError(f"sweep: unknown variable {variable!r}")
    out.validate()
    return out


def policy_by_name(name: str, cfg: ScenarioConfig) -> ExecutionPolicy:
    """Execution policy for a CLI name, inheriting the scenario's semce knobs."""
    if name not in POLICY_NAMES:
        raise ConfigurationError(
            f"policy: unknown execution policy {name!r}, expected one of {POLICY_NAMES}"
        )
    return ExecutionPolicy(name, cfg.execution.semce)


@dataclass(frozen=True)
class SweepRow:
    policy: str
    variable: str
    value: float
    seed: int
    metrics: dict


@dataclass(frozen=True)
class SweepPoint:
    policy: str
    variable: str
    value: float
    n_seeds: int
    mean: dict
    std: dict  # population stddev; zero for one seed


@dataclass(frozen=True)
class SweepResult:
    rows: List[SweepRow]
    points: List[SweepPoint]


def _run_one(task):
    cfg, policy_name, variable, value, seed = task
    result = run(replace(cfg, seed=seed))
    metrics = {name: getattr(result.summary, name) for name in AGGREGATE_METRICS}
    return SweepRow(policy_name, variable, value, seed, metrics)


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(
    cfg: ScenarioConfig,
    spec: SweepSpec,
    policies: Sequence[str],
    seeds: Sequence[int],
    jobs: Optional[int] = None,
) -> SweepResult:
    if not seeds:
        raise ConfigurationError("seeds: need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("seeds: duplicate seeds")
    tasks = []
    for name in policies:
        for value in spec.values:
            point_cfg = apply_sweep_value(cfg, spec.variable, value)
            point_cfg = replace(point_cfg, execution=policy_by_name(name, cfg))
            for seed in seeds:
                tasks.append((point_cfg, name, spec.variable, value, seed))
    jobs = jobs if jobs is not None else default_jobs()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, tasks, chunksize=4))
    else:
        rows = [_run_one(t) for t in tasks]

    points = []
    for name in policies:
        for value in spec.values:
            sub = [r for r in rows if r.policy == name and r.value == value]
            mean = {}
            std = {}
            for metric in AGGREGATE_METRICS:
                vals = np.array([r.metrics[metric] for r in sub], dtype=np.float64)
                mean[metric] = float(vals.mean())
                std[metric] = float(vals.std())
            points.append(SweepPoint(name, spec.variable, value, len(sub), mean, std))
    return SweepResult(rows=rows, points=points)


UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class ComparisonPoint:
    variable: Optional[str]
    value: Optional[float]
    baseline: dict  # metric -> {mean, std}
    candidate: dict
    ratios: dict  # metric -> float or "unbounded"


@dataclass(frozen=True)
class ComparisonReport:
    baseline_policy: str
    candidate_policy: str
    seeds: tuple
    points: List[ComparisonPoint]

    def to_dict(self) -> dict:
        return {
            "baseline_policy": self.baseline_policy,
            "candidate_policy": self.candidate_policy,
            "seeds": list(self.seeds),
            "points": [
                {
                    "variable": p.variable,
                    "value": p.value,
                    "baseline": p.baseline,
                    "candidate": p.candidate,
                    "ratios": p.ratios,
                }
                for p in self.points
            ],
        }


RATIO_METRICS = ("safety_rate", "tracking_success_rate")


def _ratio(candidate_mean: float, baseline_mean: float):
    if baseline_mean > 0:
        return candidate_mean / baseline_mean
    return UNBOUNDED


def compare_policies(
    cfg: ScenarioConfig,
    baseline: str,
    candidate: str,
    seeds: Sequence[int],
    sweep: Optional[SweepSpec] = None,
    jobs: Optional[int] = None,
) -> ComparisonReport:
    spec = sweep if sweep is not None else None
    if spec is None:
        # single operating point: reuse the sweep machinery with a 1-value spec
        spec = SweepSpec("loss_prob", (cfg.downlink.loss_prob,))
        variable_out = None
    else:
        variable_out = spec.variable
    result = run_sweep(cfg, spec, [baseline, candidate], seeds, jobs=jobs)
    points = []
    for value in spec.values:
        base_pt = next(
            p for p in result.points if p.policy == baseline and p.value == value
        )
        cand_pt = next(
            p for p in result.points if p.policy == candidate and p.value == value
        )
        stats_b = {m: {"mean": base_pt.mean[m], "std": base_pt.std[m]} for m in RATIO_METRICS}
        stats_c = {m: {"mean": cand_pt.mean[m], "std": cand_pt.std[m]} for m in RATIO_METRICS}
        ratios = {m: _ratio(cand_pt.mean[m], base_pt.mean[m]) for m in RATIO_METRICS}
        points.append(
            ComparisonPoint(
                variable=variable_out,
                value=value if variable_out is not None else None,
                baseline=stats_b,
                candidate=stats_c,
                ratios=ratios,
            )
        )
    return ComparisonReport(baseline, candidate, tuple(seeds), points)


# --- calibration ------------------------------------------------------------

CALIBRATION_LOSSES = tuple(round(0.1 + 0.05 * i, 2) for i in range(9))  # 0.10..0.50
CALIBRATION_GEO_PS = tuple(round(0.2 + 0.1 * i, 1) for i in range(7))  # 0.2..0.8
CALIBRATION_PERIODS = (1, 2, 3, 4)
STRINGENT_POINT = (4.0, 5.0)  # tightest (d_s, d_e) pair of the threshold sweeps


@dataclass(frozen=True)
class CalibrationCell:
    loss_prob: float
    geo_p: float
    base_period: int
    baseline: dict
    candidate: dict
    safety_ratio: float
    success_ratio: float

    def score(self) -> tuple:
        return (min(self.safety_ratio / 2.0, self.success_ratio / 4.5), self.success_ratio)


@dataclass(frozen=True)
class CalibrationResult:
    cells: List[CalibrationCell]
    best: CalibrationCell
    elapsed_seconds: float


def _stringent(cfg: ScenarioConfig) -> ScenarioConfig:
    out = replace(cfg, thresholds=TrackingThresholds(*STRINGENT_POINT))
    out.validate()
    return out


def calibrate_downlink(
    cfg: ScenarioConfig,
    seeds: Sequence[int],
    losses: Sequence[float] = CALIBRATION_LOSSES,
    geo_ps: Sequence[float] = CALIBRATION_GEO_PS,
    periods: Sequence[int] = CALIBRATION_PERIODS,
) -> CalibrationResult:
    """Grid-search downlink loss, geometric delay p, and base tx period.

    Each cell is scored by the semce-vs-latest_only rate ratios at the
    stringent threshold point; the best cell maximizes how close both ratios
    come to the (2.0 safety, 4.5 success) targets, then the success ratio.
    """
    import time

    from .network import GeometricDelay

    t0 = time.perf_counter()
    base = _stringent(cfg)
    cells = []
    for loss in losses:
        for p in geo_ps:
            for period in periods:
                downlink = replace(
                    base.downlink,
                    loss_prob=float(loss),
                    delay=GeometricDelay(float(p), getattr(base.downlink.delay, "cap", 20)),
                )
                if base.tx.kind == TX_FIXED:
                    tx = TxRatePolicy.fixed(int(period))
                else:
                    tx = replace(base.tx, base_period=int(period))
                cell_cfg = replace(base, downlink=downlink, tx=tx)
                stats = {}
                for name in (EXEC_LATEST_ONLY, EXEC_SEMCE):
                    pol_cfg = replace(cell_cfg, execution=policy_by_name(name, cfg))
                    vals = {m: [] for m in RATIO_METRICS}
                    for seed in seeds:
                        summary = run(replace(pol_cfg, seed=seed)).summary
                        for m in RATIO_METRICS:
                            vals[m].append(getattr(summary, m))
                    stats[name] = {m: float(np.mean(v)) for m, v in vals.items()}
                baseline = stats[EXEC_LATEST_ONLY]
                candidate = stats[EXEC_SEMCE]
                safety_ratio = (
                    candidate["safety_rate"] / baseline["safety_rate"]
                    if baseline["safety_rate"] > 0
                    else float("inf")
                )
                success_ratio = (
                    candidate["tracking_success_rate"] / baseline["tracking_success_rate"]
                    if baseline["tracking_success_rate"] > 0
                    else float("inf")
                )
                cells.append(
                    CalibrationCell(
                        loss_prob=float(loss),
                        geo_p=float(p),
                        base_period=int(period),
                        baseline=baseline,
                        candidate=candidate,
                        safety_ratio=safety_ratio,
                        success_ratio=success_ratio,
                    )
                )
    best = max(cells, key=lambda c: c.score())
    return CalibrationResult(cells=cells, best=best, elapsed_seconds=time.perf_counter() - t0)
