"""Execution selection, queue ordering, risk measure, transmission gate."""

import random

import pytest

from rcs_sim.control import CommandPacket
from rcs_sim.errors import ConfigurationError
from rcs_sim.network import SensorPacket
from rcs_sim.policies import (
    ExecutionPolicy,
    HOLD_LAST,
    QueueDiscipline,
    SemCEConfig,
    TxRatePolicy,
    aoi,
    order_sensor_queue,
    risk_proximity,
    select_command,
    semce_score,
    sensor_importance,
    tx_gate,
)
from rcs_sim.world import KinematicState, TrackingThresholds, Vec3, ZERO

TH = TrackingThresholds(1.0, 5.0)


def cpkt(pid, gen, voi=1.0):
    return CommandPacket(pid, gen, Vec3(1, 0, 0), voi, 512)


def spkt(pid, gen, importance):
    return SensorPacket(pid, gen, "uwb", KinematicState(ZERO), 512, importance)


# --- age of information -----------------------------------------------------


def test_aoi_definition():
    assert aoi(cpkt(1, 10), 15) == 5
    assert aoi(cpkt(1, 7), 7) == 0
    assert aoi(cpkt(1, 7), 8) - aoi(cpkt(1, 7), 7) == 1


def test_aoi_rejects_time_travel():
    with pytest.raises(ValueError):
        aoi(cpkt(1, 10), 9)


# --- semce scoring ----------------------------------------------------------


def test_semce_score_hand_value():
    cfg = SemCEConfig(gamma=0.9, max_aoi=10)
    assert semce_score(cpkt(1, 0, voi=2.0), 3, cfg) == pytest.approx(1.458, abs=1e-9)


def test_semce_score_fresh_packet_undiscounted():
    cfg = SemCEConfig(gamma=0.9, max_aoi=10)
    assert semce_score(cpkt(1, 5, voi=3.25), 5, cfg) == 3.25


def test_semce_score_staleness_cutoff():
    cfg = SemCEConfig(gamma=0.9, max_aoi=4)
    assert semce_score(cpkt(1, 0, voi=2.0), 4, cfg) is not None
    assert semce_score(cpkt(1, 0, voi=2.0), 5, cfg) is None


def test_semce_score_monotone_in_age():
    cfg = SemCEConfig(gamma=0.9, max_aoi=50)
    scores = [semce_score(cpkt(1, 0, voi=2.0), t, cfg) for t in range(0, 20)]
    assert all(a > b for a, b in zip(scores, scores[1:]))
    flat = SemCEConfig(gamma=1.0, max_aoi=50)
    assert len({semce_score(cpkt(1, 0, voi=2.0), t, flat) for t in range(0, 20)}) == 1


# --- command selection ------------------------------------------------------


def test_empty_queue_holds_for_every_policy():
    for policy in (ExecutionPolicy.latest_only(), ExecutionPolicy.fifo(),
                   ExecutionPolicy.semce_policy()):
        decision, discarded = select_command([], 10, policy)
        assert decision == HOLD_LAST
        assert discarded == 0


def test_latest_only_takes_newest_and_purges():
    queue = [cpkt(1, 3), cpkt(2, 7)]
    decision, _ = select_command(queue, 8, ExecutionPolicy.latest_only())
    assert decision.packet_id == 2
    assert queue == []


def test_fifo_takes_oldest_and_keeps_rest():
    queue = [cpkt(1, 3), cpkt(2, 7)]
    decision, _ = select_command(queue, 8, ExecutionPolicy.fifo())
    assert decision.packet_id == 1
    assert [p.id for p in queue] == [2]


def test_semce_prefers_valuable_backlog_over_fresh_junk():
    # generated at {7, 3} with voi {0.1, 5}: scores at t=8 are 0.09 vs 2.95
    queue = [cpkt(1, 7, voi=0.1), cpkt(2, 3, voi=5.0)]
    policy = ExecutionPolicy.semce_policy(gamma=0.9, max_aoi=10)
    assert semce_score(queue[0], 8, policy.semce) == pytest.approx(0.09, abs=1e-9)
    assert semce_score(queue[1], 8, policy.semce) == pytest.approx(2.95245, abs=1e-9)
    decision, _ = select_command(queue, 8, policy)
    assert decision.packet_id == 2
    assert [p.id for p in queue] == [1]
    latest_queue = [cpkt(1, 7, voi=0.1), cpkt(2, 3, voi=5.0)]
    latest, _ = select_command(latest_queue, 8, ExecutionPolicy.latest_only())
    assert latest.packet_id == 1


def test_semce_discards_stale_and_counts_them():
    queue = [cpkt(1, 0), cpkt(2, 1), cpkt(3, 9)]
    policy = ExecutionPolicy.semce_policy(gamma=0.9, max_aoi=3)
    decision, discarded = select_command(queue, 10, policy)
    assert discarded == 2
    assert decision.packet_id == 3
    assert queue == []


def test_semce_all_stale_holds():
    queue = [cpkt(1, 0), cpkt(2, 1)]
    policy = ExecutionPolicy.semce_policy(gamma=0.9, max_aoi=3)
    decision, discarded = select_command(queue, 50, policy)
    assert decision == HOLD_LAST
    assert discarded == 2
    assert queue == []


def test_single_packet_all_policies_agree():
    for policy in (ExecutionPolicy.latest_only(), ExecutionPolicy.fifo(),
                   ExecutionPolicy.semce_policy()):
        queue = [cpkt(4, 6, voi=0.7)]
        decision, _ = select_command(queue, 7, policy)
        assert decision.packet_id == 4


def test_semce_gamma_one_unbounded_age_picks_max_voi():
    policy = ExecutionPolicy.semce_policy(gamma=1.0, max_aoi=100000)
    queue = [cpkt(1, 90, voi=0.5), cpkt(2, 3, voi=4.0), cpkt(3, 95, voi=2.0)]
    decision, _ = select_command(queue, 100, policy)
    assert decision.packet_id == 2


def test_semce_voi_scaling_leaves_argmax_unchanged():
    rng = random.Random(9)
    policy = ExecutionPolicy.semce_policy(gamma=0.85, max_aoi=20)
    for _ in range(100):
        n = rng.randrange(1, 8)
        base = [cpkt(i, rng.randrange(0, 20), voi=rng.uniform(0.01, 5)) for i in range(n)]
        c = rng.uniform(0.1, 10)
        scaled = [CommandPacket(p.id, p.generated_slot, p.velocity_command,
                                p.voi * c, p.size_bits) for p in base]
        d1, _ = select_command(list(base), 20, policy)
        d2, _ = select_command(list(scaled), 20, policy)
        assert d1.packet_id == d2.packet_id


# --- sensor queue ordering --------------------------------------------------


def test_semantic_order_equal_importance_matches_fifo():
    queue = [spkt(1, 1, 0.5), spkt(2, 2, 0.5), spkt(3, 3, 0.5)]
    assert order_sensor_queue(queue, QueueDiscipline.SEMANTIC_PRIORITY, 5) == queue


def test_semantic_order_by_importance():
    queue = [spkt(1, 1, 1.0), spkt(2, 2, 9.0), spkt(3, 3, 4.0)]
    ordered = order_sensor_queue(queue, QueueDiscipline.SEMANTIC_PRIORITY, 5)
    assert [p.importance for p in ordered] == [9.0, 4.0, 1.0]


def test_order_empty_queue():
    assert order_sensor_queue([], QueueDiscipline.SEMANTIC_PRIORITY, 1) == []


def test_order_is_permutation():
    rng = random.Random(13)
    queue = [spkt(i, rng.randrange(1, 9), rng.random()) for i in range(30)]
    ordered = order_sensor_queue(queue, QueueDiscipline.SEMANTIC_PRIORITY, 10)
    assert sorted(p.id for p in ordered) == sorted(p.id for p in queue)
    assert order_sensor_queue(queue, QueueDiscipline.FIFO, 10) == queue


# --- risk measure -----------------------------------------------------------


def test_risk_examples():
    assert risk_proximity(3.0, TH, 3.0) == 0.0
    assert risk_proximity(1.0, TH, 3.0) == 1.0
    assert risk_proximity(5.0, TH, 3.0) == 1.0
    assert risk_proximity(2.0, TH, 3.0) == pytest.approx(0.5, abs=1e-12)
    assert risk_proximity(0.2, TH, 3.0) == 1.0
    assert risk_proximity(9.0, TH, 3.0) == 1.0


def test_risk_band_validation():
    with pytest.raises(ConfigurationError):
        risk_proximity(2.0, TH, 0.5)  # d_ref below d_s
    with pytest.raises(ConfigurationError):
        risk_proximity(2.0, TH, 6.0)  # d_ref beyond d_e
    with pytest.raises(ValueError):
        risk_proximity(-1.0, TH, 3.0)


def test_risk_degenerate_outer_edge():
    # d_ref == d_e collapses the outer ramp to a step
    assert risk_proximity(5.0, TH, 5.0) == 0.0
    assert risk_proximity(5.1, TH, 5.0) == 1.0


def test_sensor_importance_is_risk():
    assert sensor_importance(2.0, TH, 3.0) == risk_proximity(2.0, TH, 3.0)


# --- transmission gate ------------------------------------------------------


def test_fixed_period_one_fires_every_slot():
    policy = TxRatePolicy.fixed(1)
    assert all(tx_gate(policy, t, 0.0) for t in range(1, 20))


def test_fixed_period_phase():
    policy = TxRatePolicy.fixed(4)
    fires = [t for t in range(1, 13) if tx_gate(policy, t, 0.0)]
    assert fires == [4, 8, 12]


def test_dynamic_boost_under_risk():
    policy = TxRatePolicy.semantic_dynamic(4, 1, 0.8)
    assert all(tx_gate(policy, t, 0.9) for t in range(1, 10))


def test_dynamic_low_risk_matches_fixed_base():
    dyn = TxRatePolicy.semantic_dynamic(4, 1, 0.8)
    fixed = TxRatePolicy.fixed(4)
    for t in range(1, 30):
        assert tx_gate(dyn, t, 0.2) == tx_gate(fixed, t, 0.2)


def test_tx_gate_validation():
    with pytest.raises(ValueError):
        tx_gate(TxRatePolicy.fixed(1), 1, 1.5)
    with pytest.raises(ConfigurationError):
        TxRatePolicy.semantic_dynamic(2, 4)  # boost above base
    with pytest.raises(ConfigurationError):
        TxRatePolicy.fixed(0)
    with pytest.raises(ConfigurationError):
        TxRatePolicy("bogus")


def test_policy_type_validation():
    with pytest.raises(ConfigurationError):
        ExecutionPolicy("bogus")
    with pytest.raises(ConfigurationError):
        SemCEConfig(gamma=0.0)
    with pytest.raises(ConfigurationError):
        SemCEConfig(gamma=1.1)
    with pytest.raises(ConfigurationError):
        SemCEConfig(max_aoi=-1)
