"""Acceptance suite: the project's quantitative targets, one line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL line
and measured values for every criterion. All runs are seeded (1..20), so the
reported numbers are exactly reproducible.

Known state: criterion 1's tracking-success ratio target is met with margin,
but its safety-rate ratio target (>= 2.0 at the most stringent threshold
point) tops out near 1.6 in this loop architecture; the test states the
measured value and fails honestly rather than loosening the threshold. The
search evidence and analysis live in the repository notes.
"""

import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from reference_engine import run_reference
from rcs_sim import _rng, run, run_batch
from rcs_sim.cli import TRACE_HEADER, main as cli_main
from rcs_sim.config import load_scenario
from rcs_sim.engine import ScenarioConfig
from rcs_sim.experiments import calibrate_downlink, policy_by_name
from rcs_sim.network import SENSOR_CATALOG
from rcs_sim.policies import (
    ExecutionPolicy,
    SemCEConfig,
    TxRatePolicy,
    risk_proximity,
    select_command,
    semce_score,
)
from rcs_sim.control import CommandPacket, ControllerGains, ControllerState, compute_command
from rcs_sim.safety import SafetyDistanceRequirement, effective_safety_distance
from rcs_sim.world import (
    KinematicState,
    Sinusoid,
    TrackingThresholds,
    Vec3,
    ZERO,
    step_target,
    step_uav,
)

SEEDS = tuple(range(1, 21))


def report(num, name, ok, detail):
    print(f"ACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def mean_rates(cfg, policy_name):
    batch = run_batch(replace(cfg, execution=policy_by_name(policy_name, cfg)), SEEDS)
    return (
        batch.aggregate["safety_rate"].mean,
        batch.aggregate["tracking_success_rate"].mean,
    )


@pytest.fixture(scope="module")
def case_study(case_study_path):
    return load_scenario(case_study_path)


def test_criterion_1_case_study_ratio_target(case_study):
    calibration = calibrate_downlink(case_study, SEEDS)
    best = calibration.best
    shipped = (
        case_study.downlink.loss_prob,
        case_study.downlink.delay.p,
        case_study.tx.base_period,
    )
    found = (best.loss_prob, best.geo_p, best.base_period)
    runtime_ok = calibration.elapsed_seconds < 60.0
    shipped_ok = shipped == found
    success_ok = best.success_ratio >= 4.5
    safety_ok = best.safety_ratio >= 2.0
    ok = runtime_ok and shipped_ok and success_ok and safety_ok
    report(
        1,
        "case-study ratio target",
        ok,
        f"grid {len(calibration.cells)} cells in {calibration.elapsed_seconds:.1f}s "
        f"(<60s: {runtime_ok}); best cell loss={best.loss_prob} p={best.geo_p} "
        f"period={best.base_period} shipped={shipped_ok}; "
        f"success ratio {best.success_ratio:.2f} >= 4.5: {success_ok}; "
        f"safety ratio {best.safety_ratio:.2f} >= 2.0: {safety_ok}",
    )
    assert runtime_ok and shipped_ok and success_ok
    assert safety_ok, (
        f"safety-rate ratio {best.safety_ratio:.2f} is below the 2.0 target; "
        "best achievable in this architecture is ~1.6 because both policies "
        "share the edge controller's correct integral information, which keeps "
        "even the stale-executing baseline's mean separation anchored inside "
        "the band (see notes/decisions.md)"
    )


def _sweep_points():
    axis_a = [(1.0, de) for de in (2.0, 3.0, 4.0, 5.0)]
    axis_b = [(ds, 5.0) for ds in (1.0, 2.0, 3.0, 4.0)]
    return axis_a + axis_b


def test_criterion_2_dominance_across_both_axes(case_study):
    failures = []
    for ds, de in _sweep_points():
        cfg = replace(case_study, thresholds=TrackingThresholds(ds, de))
        cfg.validate()
        ls, lt = mean_rates(cfg, "latest_only")
        ss, st = mean_rates(cfg, "semce")
        if ss < ls - 0.01 or st < lt - 0.01:
            failures.append((ds, de, ls, lt, ss, st))
    ok = not failures
    report(
        2,
        "dominance sweep",
        ok,
        f"{len(_sweep_points())} threshold points, tolerance -0.01"
        + ("" if ok else f"; violations: {failures}"),
    )
    assert ok


def test_criterion_3_non_stringent_safety(case_study):
    cfg = replace(case_study, thresholds=TrackingThresholds(1.0, 5.0))
    ls, _ = mean_rates(cfg, "latest_only")
    ss, _ = mean_rates(cfg, "semce")
    ok = ls >= 0.9 and ss >= 0.9
    report(
        3,
        "non-stringent safety",
        ok,
        f"d_s=1 d_e=5: latest_only {ls:.3f}, semce {ss:.3f}, both >= 0.9",
    )
    assert ok


def test_criterion_4_perfect_channel_equilibrium(perfect_channel_path):
    cfg = load_scenario(perfect_channel_path)
    assert cfg.trajectory.max_speed() <= 0.25 * cfg.speed_limit()
    results = {}
    for name in ("latest_only", "fifo", "semce"):
        results[name] = run(replace(cfg, execution=policy_by_name(name, cfg)))
    safety_exact = all(r.summary.safety_rate == 1.0 for r in results.values())
    success_ok = all(r.summary.tracking_success_rate >= 0.95 for r in results.values())
    identical = results["latest_only"].digest() == results["semce"].digest()
    ok = safety_exact and success_ok and identical
    report(
        4,
        "perfect-channel equilibrium",
        ok,
        f"safety exactly 1.0: {safety_exact}; success >= 0.95: {success_ok} "
        f"(min {min(r.summary.tracking_success_rate for r in results.values()):.3f}); "
        f"latest_only/semce traces identical: {identical}",
    )
    assert ok


def test_criterion_5_statistical_channel_checks():
    # empirical loss fraction, consumed exactly like the channel does
    st = _rng.make_state(2026)
    p = 0.2
    n = 100000
    losses = sum(1 for _ in range(n) if _rng.uniform(st) < p)
    loss_err = abs(losses / n - p)
    loss_ok = loss_err <= 0.01

    def brute_mean(p, cap):
        mean, tail = 0.0, 1.0
        for k in range(1, cap):
            mean += k * tail * p
            tail *= 1.0 - p
        return mean + cap * tail

    geo_ok = True
    details = []
    for gp, cap in ((0.2, 20), (0.5, 10)):
        st = _rng.make_state(99)
        samples = np.array([_rng.geometric(st, gp, cap) for _ in range(100000)])
        oracle = brute_mean(gp, cap)
        rel = abs(samples.mean() - oracle) / oracle
        bounds_ok = samples.min() >= 1 and samples.max() <= cap
        geo_ok = geo_ok and rel < 0.05 and bounds_ok
        details.append(f"p={gp} cap={cap} rel_err={rel:.4f}")
    ok = loss_ok and geo_ok
    report(
        5,
        "statistical channel checks",
        ok,
        f"loss fraction err {loss_err:.4f} <= 0.01; geometric vs brute-force "
        f"oracle: {'; '.join(details)}",
    )
    assert ok


def test_criterion_6_invariant_suites(case_study, tmp_path):
    problems = []

    # partition, ordering, clamp, conservation over policies x seeds
    for name in ("latest_only", "fifo", "semce"):
        for seed in (1, 2, 3):
            res = run(replace(case_study, execution=policy_by_name(name, case_study),
                              seed=seed))
            s, c = res.summary, res.summary.counters
            if s.unsafe_slots + s.successful_slots + s.unsuccessful_slots != s.counted_slots:
                problems.append(f"partition {name}/{seed}")
            if s.safety_rate < s.tracking_success_rate:
                problems.append(f"rate ordering {name}/{seed}")
            if res.uav_speed.max() > case_study.speed_limit() or not res.speed_ok.all():
                problems.append(f"speed clamp {name}/{seed}")
            if c["uplink_enqueued"] != c["uplink_sent"] + c["uplink_dropped"] + c["uplink_pending_end"]:
                problems.append(f"uplink conservation {name}/{seed}")
            if c["downlink_sent"] != c["downlink_lost"] + c["downlink_in_flight_end"] + c["downlink_delivered"]:
                problems.append(f"downlink conservation {name}/{seed}")

    # semce score monotone in age
    cfg6 = SemCEConfig(gamma=0.9, max_aoi=50)
    pkt = CommandPacket(1, 0, Vec3(1, 0, 0), 2.0, 512)
    scores = [semce_score(pkt, t, cfg6) for t in range(25)]
    if not all(a > b for a, b in zip(scores, scores[1:])):
        problems.append("semce monotonicity")

    # voi scaling leaves the semce argmax unchanged
    policy = ExecutionPolicy.semce_policy(0.85, 20)
    queue = [CommandPacket(i, g, Vec3(1, 0, 0), v, 512)
             for i, (g, v) in enumerate([(3, 0.4), (9, 0.1), (14, 2.0), (11, 0.9)])]
    d1, _ = select_command(list(queue), 15, policy)
    scaled = [CommandPacket(p.id, p.generated_slot, p.velocity_command, p.voi * 7.5,
                            p.size_bits) for p in queue]
    d2, _ = select_command(list(scaled), 15, policy)
    if d1.packet_id != d2.packet_id:
        problems.append("voi scaling invariance")

    # byte-identical rerun
    if run(case_study).digest() != run(case_study).digest():
        problems.append("determinism")

    # CSV schema conformance through the CLI writer
    out = tmp_path / "schema"
    code = cli_main(["run", "--config", str(tmp_path / "missing.toml"), "--out", str(out)])
    if code != 3:
        problems.append("exit code for missing file")
    code = cli_main(["run", "--config", _case_path(), "--out", str(out)])
    if code != 0:
        problems.append("cli run on case study")
    else:
        with open(out / "trace.csv", newline="") as fh:
            first = fh.readline().rstrip("\n")
            if first != TRACE_HEADER:
                problems.append("trace header")
            rows = list(csv.DictReader(fh, fieldnames=first.split(",")))
            if len(rows) != case_study.T:
                problems.append("trace row count")
            if any(r["status"] not in ("unsafe", "successful", "unsuccessful")
                   for r in rows):
                problems.append("status labels")

    ok = not problems
    report(6, "invariant suites", ok, "all invariants hold" if ok else f"failed: {problems}")
    assert ok


def _case_path():
    import pathlib

    return str(pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "case-study.toml")


def test_criterion_7_hand_oracle_values():
    checks = []

    # freshness-discounted value: 2 * 0.9^3
    pkt = CommandPacket(1, 0, Vec3(1, 0, 0), 2.0, 512)
    checks.append(abs(semce_score(pkt, 3, SemCEConfig(0.9, 10)) - 1.458) < 1e-9)

    # band-edge proximity: (3-2)/(3-1)
    th = TrackingThresholds(1.0, 5.0)
    checks.append(abs(risk_proximity(2.0, th, 3.0) - 0.5) < 1e-9)

    # capacity 1024 bits moves exactly two 512-bit packets per slot
    from rcs_sim.network import ChannelConfig, DeterministicDelay, LinkQueue, SensorPacket
    from rcs_sim.policies import QueueDiscipline

    q = LinkQueue()
    for i in range(5):
        q.enqueue(SensorPacket(i, 1, "uwb", KinematicState(ZERO), 512, 0.0),
                  QueueDiscipline.FIFO)
    sent = q.transmit(ChannelConfig(1024, 0.0, DeterministicDelay(1)),
                      QueueDiscipline.FIFO, 1, _rng.make_state(1))
    checks.append(len(sent) == 2)

    # pure P with the configured 0.5 gain: e=(2,0,0) -> (1,0,0)
    cmd, _ = compute_command(ZERO, Vec3(2, 0, 0), ControllerGains(0.5),
                             ControllerState(), 0.1)
    checks.append(abs(cmd.x - 1.0) < 1e-9 and cmd.y == 0.0)

    # dynamic safety distance: 1 + 2 * 0.5
    eff = effective_safety_distance(SafetyDistanceRequirement(1.0, reaction_time=0.5), 2.0)
    checks.append(abs(eff - 2.0) < 1e-9)

    # clamp + integrate: cmd (2,0,0) capped at 1 for one 1 s slot
    out = step_uav(KinematicState(ZERO), Vec3(2, 0, 0), 1.0, 1.0)
    checks.append(abs(out.position.x - 1.0) < 1e-9)

    # drifting flat sinusoid advances 0.1 m per slot
    st = step_target(Sinusoid(0.0, 10.0, Vec3(1, 0, 0)), 7, 0.1)
    checks.append(abs(st.position.x - 0.7) < 1e-9)

    ok = all(checks)
    report(7, "hand-oracle unit values", ok,
           f"{sum(checks)}/{len(checks)} frozen values within 1e-9")
    assert ok


def test_uplink_sensor_catalog_is_complete():
    # the catalog used for sensor validation covers all eleven entries
    assert len(SENSOR_CATALOG) == 11
    assert {"uwb", "lidar", "imu", "depth_camera"} <= set(SENSOR_CATALOG)
