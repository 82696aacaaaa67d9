import json

import pytest

from errors import ConfigError
from managers import ConfigManager
from sky_sim import InjectedPair, SimConfig


def test_defaults_follow_the_preset():
    desk = ConfigManager()
    assert desk.get_run()["preset"] == "desk"
    assert desk.get_run()["file_duration_hr"] == 0.1
    assert desk.sim_config().fft_len == SimConfig.preset("desk").fft_len
    full = ConfigManager(preset="full")
    assert full.sim_config().fft_len == 2 ** 24
    assert full.get_run()["file_duration_hr"] == 4.0
    assert full.get_excision()["trip_threshold"] == 10
    assert full.notches().second_level_band_hz == (1405e6, 1435e6)


def test_scenario_file_then_overrides(tmp_path):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps({
        "simulation": {"seed": 5},
        "run": {"level": "first", "ra_of_interest_hr": 7.0},
        "injections": {"pairs": [
            {"f_low_hz": 1415.05e6, "delta_f_hz": 37.0, "snr_db": 30.0, "source_ra_hr": 5.0, "start_mjd": 60284.0},
        ]},
    }))
    config = ConfigManager(scenario, overrides={"simulation": {"seed": 9}, "run": {"level": None}})
    assert config.get_section("simulation")["seed"] == 9
    assert config.get_run()["level"] == "first"
    assert config.get_run()["ra_of_interest_hr"] == 7.0
    assert config.injected_pairs() == [InjectedPair(1415.05e6, 37.0, 30.0, 5.0, 60284.0)]
    assert config.path == scenario


def test_scenario_can_choose_the_preset(tmp_path):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps({"run": {"preset": "full"}}))
    assert ConfigManager(scenario).sim_config().fft_len == 2 ** 24
    assert ConfigManager(scenario, preset="desk").get_run()["preset"] == "desk"


@pytest.mark.parametrize("overrides", [
    {"telescope": {"x": 1}},
    {"run": {"colour": "blue"}},
    {"run": {"level": "third"}},
    {"run": {"schedule": "weekly"}},
    {"run": {"ra_of_interest_hr": 24.0}},
    {"simulation": {"sigma": -1.0}},
    {"excision": {"margin_snapshot": "never"}},
    {"injections": {"pairs": [{"f_low_hz": 1.0}]}},
    {"injections": {"comets": []}},
])
def test_bad_values_are_config_errors(overrides):
    with pytest.raises(ConfigError):
        ConfigManager(overrides=overrides)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        ConfigManager(preset="huge")


def test_invalid_json(tmp_path):
    scenario = tmp_path / "broken.json"
    scenario.write_text("{not json")
    with pytest.raises(ConfigError):
        ConfigManager(scenario)


def test_missing_scenario_is_an_io_error(tmp_path):
    with pytest.raises(OSError):
        ConfigManager(tmp_path / "missing.json")


def test_resolved_config_is_saved(tmp_path, small_config_dict):
    config = ConfigManager(overrides=small_config_dict)
    path = config.save_resolved(tmp_path / "out")
    saved = json.loads(path.read_text(encoding="utf-8"))
    assert saved == config.as_dict()
    assert saved["simulation"]["fft_len"] == 4096
