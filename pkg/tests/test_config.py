import pytest

from mgprecoding.config import (CONFIG_KEYS, ConfigError, ExperimentConfig, config_from_mapping,
                                load_config, resolve_scenario)
from mgprecoding.cooperation import Kind


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.scheme.kind is Kind.GCM
    assert cfg.power_w == pytest.approx(1000.0)
    assert cfg.geometry.num_beams == 21 and cfg.drops == 500


def test_nested_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("cooperation: 4gc\nprecoder:\n  flavor: zf\nfeeder:\n  rho: 0.5\n  num_interferers: 1\n"
                 "run:\n  drops: 7\n  seed: 9\n  powers_dbw: [10, 20]\nrain:\n  clear_sky: true\n")
    cfg = load_config(p)
    assert cfg.scheme.name == "4gc" and cfg.flavor == "zf"
    assert cfg.feeder.rho == 0.5 and cfg.feeder.num_interferers == 1
    assert cfg.drops == 7 and cfg.seed == 9 and cfg.powers_dbw == (10.0, 20.0)
    assert cfg.rain.clear_sky


def test_dotted_keys_and_base():
    base = ExperimentConfig(seed=3)
    cfg = config_from_mapping({"run.drops": 4, "beams.count": 49}, base)
    assert cfg.seed == 3 and cfg.drops == 4 and cfg.geometry.num_beams == 49


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("")
    assert load_config(p) == ExperimentConfig()


def test_full_preset():
    cfg = config_from_mapping({"layout": {"preset": "full"}})
    assert cfg.geometry.num_beams == 100 and cfg.geometry.cluster_size == 7
    cfg = config_from_mapping({"layout": {"preset": "desk"}})
    assert cfg.geometry.num_beams == 21


@pytest.mark.parametrize("mapping", [
    {"run": {"drop": 5}},
    {"precoder": {"flavour": "zf"}},
    {"run.drops": "ten"},
    {"run.drops": 2.5},
    {"rain.clear_sky": 1},
    {"feeder.rho": True},
    {"feeder.rho": 1.5},
    {"run.drops": 0},
    {"precoder.flavor": "mrt"},
    {"precoder.mmse_reg": "other"},
    {"cooperation": "mesh"},
    {"cooperation": 9},
    {"layout.preset": "huge"},
    {"csi.max_feeds": 0},
    {"run.powers_dbw": []},
    {"run.powers_dbw": ["a"]},
])
def test_bad_configs(mapping):
    with pytest.raises(ConfigError):
        config_from_mapping(mapping)


def test_unreadable_and_invalid_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    p = tmp_path / "bad.yaml"
    p.write_text("run: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(p)
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(p)


@pytest.mark.parametrize("value, name", [(1, "icm"), (2, "4gc"), (3, "7gc"), (4, "gcm"), (5, "ref"),
                                         (6, "lmc"), ("4", "gcm"), ("LMC", "lmc")])
def test_resolve_scenario(value, name):
    assert resolve_scenario(value).name == name


def test_mapping_round_trip():
    cfg = ExperimentConfig(cooperation="lmc", flavor="zf", drops=12, seed=5, csi_max_feeds=31,
                           powers_dbw=(5.0, 15.0))
    flat = cfg.to_mapping()
    assert set(flat) == set(CONFIG_KEYS) - {"layout.preset"}
    assert config_from_mapping(flat) == cfg
