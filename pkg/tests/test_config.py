import math

import pytest

from cvnetsim.config import ConfigError, ScenarioConfig, config_from_dict, load_config, parse_rate, parse_speed
from cvnetsim.mobility import MPH_TO_MPS


def test_defaults_are_complete():
    cfg = ScenarioConfig()
    assert cfg.duration == 100.0 and cfg.warmup == 0.0
    assert cfg.tech == "mmwave" and cfg.mac_dsrc is None
    d = cfg.to_dict()
    assert d["radio"]["carrier_frequency"] == 73e9
    assert len(cfg.digest()) == 64


@pytest.mark.parametrize("text, mps", [("35 mph", 35 * MPH_TO_MPS), ("55mph", 55 * MPH_TO_MPS), ("15.6 m/s", 15.6)])
def test_speed_units(text, mps):
    assert parse_speed(text) == mps


def test_bare_speed_rejected():
    with pytest.raises(ConfigError, match="unit"):
        parse_speed(35)


@pytest.mark.parametrize("value, bps", [("250 Kbps", 250e3), ("10 Mbps", 10e6), (125000, 125e3)])
def test_rates(value, bps):
    assert parse_rate(value) == bps


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="traffic: unknown key"):
        config_from_dict({"traffic": {"packet_sise": 256}})


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"phy": {}})


def test_dsrc_radio_with_mmwave_mac_names_both():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"radio": {"tech": "dsrc"}, "mac_mmwave": {"harq_max_retx": 2}})
    assert "radio.tech" in str(err.value) and "mac_mmwave" in str(err.value)


def test_preset_with_overrides():
    cfg = config_from_dict({
        "scenario": {"preset": "fig6-40cv-55mph", "duration": 20, "seed": 9},
        "traffic": {"offered_rate": "1 Mbps"},
        "radio": {"fading_m": "inf"},
    })
    assert (cfg.cv_count, cfg.duration, cfg.seed) == (40, 20, 9)
    assert cfg.traffic.offered_rate == 1e6
    assert math.isinf(cfg.radio.fading_m)


def test_switching_to_dsrc_swaps_defaults():
    cfg = config_from_dict({"radio": {"tech": "dsrc"}, "mac_dsrc": {"queue_capacity": 50, "channel_bit_rate": "12 Mbps"}})
    assert cfg.radio.carrier_frequency == 5.9e9
    assert cfg.mac_dsrc.queue_capacity == 50 and cfg.mac_dsrc.channel_bit_rate == 12e6


def test_custom_mcs_table_and_subframe():
    cfg = config_from_dict({"mac_mmwave": {"mcs_table": [[0, 1], [10, 3]], "symbols_per_subframe": 14,
                                           "queue_capacity_bytes": "unlimited"}})
    assert cfg.mac_mmwave.mcs.rows == ((0.0, 1.0), (10.0, 3.0))
    assert cfg.mac_mmwave.subframe.data_symbols == 12
    assert cfg.mac_mmwave.queue_capacity_bytes is None


@pytest.mark.parametrize("data, field", [
    ({"scenario": {"cv_count": 0}}, "cv_count"),
    ({"scenario": {"duration": -1}}, "duration"),
    ({"scenario": {"warmup": 200}}, "warmup"),
    ({"scenario": {"cv_count": 2.5}}, "cv_count"),
    ({"radio": {"leakage_factor": 2}}, "radio"),
    ({"mac_mmwave": {"mcs_table": [[1, 1], [0, 2]]}}, "mcs_table"),
    ({"mobility": {"mode": "trace"}}, "trace_path"),
    ({"channel": {"blockage_mode": "walls"}}, "channel"),
])
def test_invalid_values_name_the_field(data, field):
    with pytest.raises(ConfigError, match=field):
        config_from_dict(data)


def test_load_toml_with_relative_trace(tmp_path):
    (tmp_path / "cars.tcl").write_text('$node_(0) set X_ 1.0\n$node_(0) set Y_ 2.0\n')
    path = tmp_path / "scenario.toml"
    path.write_text('[scenario]\nmax_speed = "35 mph"\n[mobility]\nmode = "trace"\ntrace_path = "cars.tcl"\n')
    cfg = load_config(path)
    assert cfg.mobility.trace_path == str(tmp_path / "cars.tcl")
    assert cfg.max_speed == 35 * MPH_TO_MPS


def test_bad_toml_is_a_config_error(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[scenario\n")
    with pytest.raises(ConfigError):
        load_config(path)
