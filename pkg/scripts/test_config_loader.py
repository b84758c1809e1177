import glob
import os

import numpy as np

from harness import ROOT, run_all, write_yaml

from srlab.config_loader import ExperimentConfig, load_config
from srlab.errors import ConfigError


def _config_error(text):
    try:
        load_config(write_yaml(text))
    except ConfigError as e:
        return e
    assert False, f"config should be rejected:\n{text}"


def test_minimal_file_fills_defaults():
    config = load_config(write_yaml("# defaults only\n"))
    assert config.rho == 1.0 and config.l0 == 1.0
    assert config.replications == 500 and config.horizon == 20000
    assert [p.kind for p in config.policies] == ["srts"]
    assert config.instance == "paper"
    assert config.build_instance().optimal_arm == 8
    assert abs(config.constants.c1 * config.constants.c2 - 0.5) < 1e-15


def test_zero_replications_rejected():
    e = _config_error("horizon: 100\nreplications: 0\n")
    assert e.field == "replications"
    assert e.line == 2


def test_unknown_key_named():
    e = _config_error("horizon: 100\nrh0: 2.0\n")
    assert e.field == "rh0"
    assert "unknown key" in str(e)
    assert e.line == 2


def test_yaml_syntax_error_has_line():
    e = _config_error("horizon: 100\nrho_grid: [1, 2\nreplications: 3\n")
    assert e.line is not None and e.line >= 2


def test_horizon_below_arm_count():
    e = _config_error("horizon: 5\n")
    assert e.field == "horizon"
    assert "K=10" in str(e)


def test_rho_grid_validation():
    for grid in ("[0.0, 1.0]", "[-1, 2]", "[]"):
        e = _config_error(f"horizon: 100\nrho_grid: {grid}\n")
        assert e.field.startswith("rho_grid"), e.field


def test_tied_instance_rejected():
    e = _config_error(
        "instance:\n"
        "  - {mean: 0.5, variance: 0.1}\n"
        "  - {mean: 0.5, variance: 0.1}\n"
        "horizon: 10\n"
    )
    assert e.field == "instance"
    assert "[0, 1]" in str(e)


def test_equal_means_tie_at_rho_zero():
    e = _config_error("means_override: 1.0\nrho: 0.0\nhorizon: 100\n")
    assert e.field == "instance"


def test_policy_field_path_and_line():
    e = _config_error("horizon: 100\npolicies:\n  - kind: srts\n  - kind: ucb1\n")
    assert e.field == "policies.1.kind"
    assert e.line == 4


def test_duplicate_policy_labels_rejected():
    e = _config_error("horizon: 100\npolicies:\n  - kind: srts\n  - kind: srts\n")
    assert e.field == "policies"
    assert e.line == 2
    assert "srts" in str(e)

    config = load_config(write_yaml("horizon: 100\npolicies:\n  - kind: srts\n  - {kind: srts, rho: 0.0}\n"))
    assert [p.display_label() for p in config.policies] == ["srts", "srts(rho=0)"]


def test_bound_constant_relation():
    e = _config_error("horizon: 100\nconstants:\n  c1: 0.95\n")
    assert e.field == "constants"
    assert e.line == 2


def test_missing_file_and_bad_top_level():
    try:
        load_config(os.path.join(ROOT, "config", "does_not_exist.yaml"))
        assert False, "missing file must raise ConfigError"
    except ConfigError:
        pass
    e = _config_error("- horizon\n- 100\n")
    assert "mapping" in str(e)


def test_inline_instance_and_means_override():
    config = load_config(write_yaml(
        "instance:\n"
        "  - {mean: 0.2, variance: 0.3}\n"
        "  - {mean: 0.6, variance: 0.9}\n"
        "means_override: 1.0\n"
        "horizon: 10\n"
    ))
    instance = config.build_instance()
    assert np.all(instance.means == 1.0)
    assert instance.optimal_arm == 0


def test_rho_values_sorted():
    config = ExperimentConfig(horizon=100, rho_grid=[10.0, 0.001, 1.0])
    assert config.rho_values() == [0.001, 1.0, 10.0]
    assert ExperimentConfig(horizon=100, rho=2.0).rho_values() == [2.0]


def test_config_hash_and_overrides():
    config = ExperimentConfig(horizon=100, replications=3)
    same = ExperimentConfig(horizon=100, replications=3)
    assert config.config_hash() == same.config_hash()
    assert len(config.config_hash()) == 64

    reseeded = config.with_overrides(seed=11)
    assert reseeded.base_seed == 11
    assert reseeded.config_hash() != config.config_hash()

    moved = config.with_overrides(out="elsewhere", log_level="debug")
    assert moved.output_dir == "elsewhere" and moved.log_level == "DEBUG"
    assert moved.config_hash() == config.config_hash()

    assert config.with_overrides(full=True).full_resolution
    assert config.with_overrides() is config


def test_shipped_configs_load():
    paths = sorted(glob.glob(os.path.join(ROOT, "config", "*.yaml")))
    assert paths, "no configs shipped"
    configs = {}
    for path in paths:
        config = load_config(path)
        assert config.horizon >= config.build_instance().k
        configs[os.path.basename(path)] = config

    def kinds(name):
        return [p.kind for p in configs[name].policies]

    equal_means = configs["equal_means_rho1.yaml"]
    assert equal_means.means_override == 1.0 and equal_means.rho == 1.0 and equal_means.rho_grid is None
    assert equal_means.build_instance().optimal_arm == 0
    assert kinds("equal_means_rho1.yaml") == ["srts", "sr-ucb", "mv-lcb", "round-robin"]

    mean_max = configs["paper_rho0.yaml"]
    assert mean_max.rho == 0.0 and mean_max.build_instance().optimal_arm == 9
    assert {"srts", "mean-ts"} <= set(kinds("paper_rho0.yaml"))

    assert configs["paper_rho1.yaml"].rho == 1.0
    assert kinds("paper_sweep.yaml") == ["srts", "sr-ucb", "mv-lcb"]
    assert configs["paper_sweep.yaml"].rho_values()[0] == 0.001
    assert configs["equal_means_sweep.yaml"].means_override == 1.0


if __name__ == "__main__":
    run_all(globals())
