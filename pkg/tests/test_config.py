"""JSON configuration parsing and validation tests."""

import json

import pytest

from fopidboost.beecolony import FOPID_BOUNDS, PID_BOUNDS
from fopidboost.config import (
    ConfigError,
    config_from_dict,
    default_config,
    load_config,
    resolved_dict,
)


def test_defaults():
    cfg = default_config()
    assert cfg.converter.v_g == 5.0
    assert cfg.converter.r_load == 25.0
    assert cfg.modulator.f_sw == 10e3
    assert cfg.ora.n_sections == 8
    assert cfg.scenario.v_ref == 12.0
    assert cfg.scenario.disturbance is None
    assert cfg.colony_size == 10
    assert cfg.max_iterations == 20
    assert cfg.scout_limit is None
    assert cfg.controller is None
    assert cfg.u_min == 0.0
    assert cfg.u_max == 0.95


def test_full_document_parses():
    cfg = config_from_dict({
        "converter": {"v_g": 6.0, "r_load": 30.0},
        "modulator": {"f_sw": 20e3, "phase": 0.25},
        "ora": {"omega_l": 1.0, "omega_h": 1e5, "n_sections": 6},
        "scenario": {"v_ref": 15.0, "horizon": 0.02,
                     "disturbance": {"time": 0.01, "relative_step": -0.2},
                     "break_threshold": 500.0},
        "abc": {"colony_size": 8, "max_iterations": 5, "limit": 3},
        "controller": {"kp": 2.0, "ti": 3e-3, "td": 1e-3,
                       "lam": 0.9, "mu": 0.7, "u_max": 0.9},
    })
    assert cfg.converter.v_g == 6.0
    assert cfg.modulator.phase == 0.25
    assert cfg.ora.omega_h == 1e5
    assert cfg.scenario.disturbance.relative_step == -0.2
    assert cfg.break_threshold == 500.0
    assert cfg.controller.lam == 0.9
    assert cfg.u_max == 0.9

    setup = cfg.tuning_setup()
    assert setup.f_sw == 20e3
    assert setup.pwm_phase == 0.25
    assert setup.break_threshold == 500.0
    assert setup.u_max == 0.9

    abc = cfg.abc_config(pid=True, rng_seed=7)
    assert abc.bounds == PID_BOUNDS
    assert abc.rng_seed == 7
    assert abc.limit == 3
    assert cfg.abc_config(pid=False, rng_seed=0).bounds == FOPID_BOUNDS


def test_unknown_sections_and_keys_are_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"convertor": {}})
    with pytest.raises(ConfigError):
        config_from_dict({"converter": {"v_gg": 5.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"scenario": {"disturbance": {"when": 0.1}}})
    with pytest.raises(ConfigError):
        config_from_dict({"converter": []})
    with pytest.raises(ConfigError):
        config_from_dict([])


def test_type_checking():
    with pytest.raises(ConfigError):
        config_from_dict({"converter": {"v_g": True}})
    with pytest.raises(ConfigError):
        config_from_dict({"converter": {"v_g": "5"}})
    with pytest.raises(ConfigError):
        config_from_dict({"abc": {"colony_size": 9.5}})
    with pytest.raises(ConfigError):
        config_from_dict({"ora": {"n_sections": True}})


def test_controller_gains_are_all_or_nothing():
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"kp": 1.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"kp": 1.0, "ti": 1e-2}})
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"lam": 0.9}})
    cfg = config_from_dict({"controller": {"kp": 1.0, "ti": 1e-2, "td": 1e-3}})
    assert cfg.controller.lam == 1.0
    assert cfg.controller.mu == 1.0


def test_duty_limits_must_be_ordered():
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"u_min": 0.9, "u_max": 0.5}})


def test_nested_validation_surfaces_as_config_error():
    with pytest.raises(ConfigError):
        config_from_dict({"converter": {"r_load": -1.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"scenario": {"horizon": 0.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"ora": {"omega_l": 1e6, "omega_h": 1.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"abc": {"colony_size": 1}})
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"kp": 2.0, "ti": 0.0, "td": 1e-3}})
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"kp": 2.0, "ti": 1e-2, "td": 1e-3,
                                         "lam": 3.0}})


def test_load_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"scenario": {"horizon": 0.01}}))
    assert load_config(path).scenario.horizon == 0.01

    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_resolved_dict_round_trips():
    cfg = config_from_dict({
        "modulator": {"f_sw": 20e3},
        "scenario": {"disturbance": {"time": 0.01, "relative_step": 0.1},
                     "horizon": 0.02},
        "controller": {"kp": 2.0, "ti": 3e-3, "td": 1e-3},
    })
    doc = resolved_dict(cfg)
    assert doc["modulator"]["f_sw"] == 20e3
    assert doc["scenario"]["disturbance"]["time"] == 0.01
    assert config_from_dict(doc) == cfg

    bare = default_config()
    assert config_from_dict(resolved_dict(bare)) == bare
