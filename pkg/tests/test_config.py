"""Scenario file loading, validation, and resolved-config round-trips."""

import pytest

from rcs_sim.config import config_from_dict, load_scenario, resolved_dict
from rcs_sim.errors import ConfigurationError
from rcs_sim.network import GeometricDelay
from rcs_sim.policies import QueueDiscipline


def minimal() -> dict:
    return {
        "seed": 5,
        "sim": {"T": 50, "dt": 0.1},
        "uplink": {"capacity_bits": 16384},
        "downlink": {"capacity_bits": 2048},
    }


def test_minimal_dict_fills_defaults():
    cfg = config_from_dict(minimal())
    assert cfg.T == 50
    assert cfg.thresholds.d_s == 1.0 and cfg.thresholds.d_e == 5.0
    assert cfg.resolved_d_ref() == 3.0
    assert cfg.gains.kp == 0.5
    assert cfg.execution.kind == "latest_only"
    assert cfg.sensors[0].name == "uwb"
    assert cfg.seed == 5


def test_load_case_study(case_study_path):
    cfg = load_scenario(case_study_path)
    assert cfg.thresholds.d_s == 1.0
    assert cfg.thresholds.d_e == 5.0
    assert cfg.downlink.loss_prob == 0.1
    assert isinstance(cfg.downlink.delay, GeometricDelay)
    assert cfg.downlink.delay.p == 0.2
    assert cfg.execution.kind == "semce"
    assert cfg.execution.semce.gamma == 0.8
    assert cfg.execution.semce.max_aoi == 4
    assert cfg.tx.base_period == 1
    assert cfg.gains.ki == 1.2
    assert cfg.speed_limit() == 2.0


def test_load_perfect_channel(perfect_channel_path):
    cfg = load_scenario(perfect_channel_path)
    assert cfg.warmup == 50
    assert cfg.downlink.loss_prob == 0.0
    assert cfg.trajectory.max_speed() <= 0.25 * cfg.speed_limit()


def test_unknown_top_level_key_rejected():
    data = minimal()
    data["simulator"] = {}
    with pytest.raises(ConfigurationError, match="simulator"):
        config_from_dict(data)


def test_unknown_nested_key_named_with_path():
    data = minimal()
    data["sim"]["Tx"] = 10
    with pytest.raises(ConfigurationError, match="sim.Tx"):
        config_from_dict(data)


def test_threshold_error_names_section():
    data = minimal()
    data["thresholds"] = {"d_s": 5.0, "d_e": 5.0}
    with pytest.raises(ConfigurationError, match="thresholds"):
        config_from_dict(data)


def test_delay_kind_cross_keys_rejected():
    data = minimal()
    data["downlink"]["delay"] = {"kind": "geometric", "k": 3}
    with pytest.raises(ConfigurationError, match="downlink.delay"):
        config_from_dict(data)
    data["downlink"]["delay"] = {"kind": "deterministic", "p": 0.5}
    with pytest.raises(ConfigurationError, match="downlink.delay"):
        config_from_dict(data)
    data["downlink"]["delay"] = {"kind": "geometric"}
    with pytest.raises(ConfigurationError, match="downlink.delay.p"):
        config_from_dict(data)


def test_downlink_retransmit_rejected():
    data = minimal()
    data["downlink"]["retransmit"] = True
    with pytest.raises(ConfigurationError, match="downlink.retransmit"):
        config_from_dict(data)


def test_catalog_sensor_out_of_range_named():
    data = minimal()
    data["sensors"] = [{"name": "uwb", "frequency_hz": 5.0}]
    with pytest.raises(ConfigurationError, match="sensors.frequency_hz"):
        config_from_dict(data)


def test_custom_sensor_requires_size():
    data = minimal()
    data["sensors"] = [{"name": "beacon", "frequency_hz": 5.0}]
    with pytest.raises(ConfigurationError, match="size_bits"):
        config_from_dict(data)


def test_semantic_queue_and_dynamic_tx_parse():
    data = minimal()
    data["policy"] = {
        "execution": "semce",
        "sensor_queue": "semantic_priority",
        "semce": {"gamma": 0.7, "max_aoi": 6},
        "tx": {"kind": "semantic_dynamic", "base": 4, "boost": 1, "threshold": 0.3},
    }
    cfg = config_from_dict(data)
    assert cfg.sensor_queue is QueueDiscipline.SEMANTIC_PRIORITY
    assert cfg.tx.kind == "semantic_dynamic"
    assert cfg.tx.boost_period == 1


def test_fixed_tx_rejects_dynamic_keys():
    data = minimal()
    data["policy"] = {"tx": {"kind": "fixed", "base": 2, "boost": 1}}
    with pytest.raises(ConfigurationError, match="policy.tx"):
        config_from_dict(data)


def test_explicit_d_ref_validated_against_band():
    data = minimal()
    data["control"] = {"d_ref": 0.5}
    with pytest.raises(ConfigurationError, match="control.d_ref"):
        config_from_dict(data)
    data["control"] = {"d_ref": 4.0}
    assert config_from_dict(data).resolved_d_ref() == 4.0


def test_resolved_dict_round_trips(case_study_path):
    cfg = load_scenario(case_study_path)
    tree = resolved_dict(cfg)
    again = config_from_dict(tree)
    assert resolved_dict(again) == tree


def test_resolved_dict_round_trips_all_trajectories():
    for target in (
        {"kind": "sinusoid", "amplitude": 1.0, "period": 12.0, "drift": [0.2, 0, 0]},
        {"kind": "waypoint_loop", "waypoints": [[0, 0, 0], [4, 0, 0], [4, 4, 0]],
         "speed": 0.5},
        {"kind": "random_walk", "step_stddev": 0.2, "max_speed": 0.9},
    ):
        data = minimal()
        data["target"] = target
        cfg = config_from_dict(data)
        tree = resolved_dict(cfg)
        assert resolved_dict(config_from_dict(tree)) == tree


def test_walk_seed_resolution_is_stable():
    data = minimal()
    data["target"] = {"kind": "random_walk", "step_stddev": 0.2}
    cfg = config_from_dict(data)
    assert cfg.resolved_walk_seed() == cfg.resolved_walk_seed()
    data["seed"] = 6
    other = config_from_dict(data)
    assert other.resolved_walk_seed() != cfg.resolved_walk_seed()


def test_bad_toml_reported_as_config_error(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("seed = [unclosed")
    with pytest.raises(ConfigurationError):
        load_scenario(str(path))
