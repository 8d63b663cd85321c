#!/usr/bin/env python3
"""
Tests for the system configuration layers and experiment configuration files.
"""

import json
import os
import sys
import tempfile
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from core.interfaces import ConfigurationError
from core.schemas import ExperimentConfig
from utils.config import DEFAULT_CONFIG_FILE, SystemConfig, worker_count
from utils.experiment_config import (config_hash, load_experiment_config, parse_experiment_text,
                                     serialize_experiment_config, write_experiment_config)

SRC_ROOT = Path(__file__).resolve().parents[2]


def test_system_config_layers():
    cfg = SystemConfig(str(DEFAULT_CONFIG_FILE))
    assert cfg.get_config("simulation.area_jump") == 1e-4
    assert cfg.get_config("missing.key", 7) == 7

    os.environ["LAB_SIMULATION_MAX_RETRIES"] = "3"
    try:
        assert cfg.get_config("simulation.max_retries") == 3
        cfg.set_config("simulation.max_retries", 5)
        assert cfg.get_config("simulation.max_retries") == 5
        cfg.set_config("simulation.max_retries", None)
        assert cfg.get_config("simulation.max_retries") == 3
    finally:
        del os.environ["LAB_SIMULATION_MAX_RETRIES"]
    assert cfg.get_config("simulation.max_retries") == 8

    cfg.set_config("estimates.growth_slack", 0.0)
    assert cfg.get_config("estimates.growth_slack") == 0.0
    merged = cfg.get_all_config()
    assert merged["estimates"]["growth_slack"] == 0.0
    assert merged["estimates"]["small_eps_threshold"] == 0.05
    cfg.reset()
    assert cfg.get_config("estimates.growth_slack") == 0.1
    print("✓ Runtime values override environment, file and defaults")


def test_system_config_file_errors():
    cfg = SystemConfig()
    with tempfile.TemporaryDirectory() as tmp:
        with pytest.raises(ConfigurationError, match="not found"):
            cfg.load_config(str(Path(tmp) / "absent.json"))
        bad = Path(tmp) / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigurationError, match="Invalid JSON"):
            cfg.load_config(str(bad))
        bad.write_text(json.dumps([1, 2]))
        with pytest.raises(ConfigurationError, match="JSON object"):
            cfg.load_config(str(bad))
    print("✓ Missing or malformed configuration files raise ConfigurationError")


def test_worker_count():
    assert worker_count() >= 1
    print(f"✓ Worker count {worker_count()}")


def test_default_experiment_file():
    cfg = load_experiment_config(SRC_ROOT / "config" / "default_experiment.cfg")
    assert cfg.constants.C is None and cfg.constants.s0 is None
    assert cfg.kernel.battery_dir is None
    assert cfg.simulate.snapshot_times == [0.0, 0.5, 1.0]
    assert cfg.bounds.synthetic == "exp_exp_2t_over_pi"
    assert cfg.regions.h_grid[0] == 1e-4
    print("✓ Default experiment file loads with fitted C, unset s0 and battery directory")


def test_experiment_round_trip_and_hash():
    text = """
    [constants]
    C = 2.5
    s0 = 1e-6
    [estimates]
    eps_values = 1e-3, 1e-5
    [simulate]
    snapshot_times =
    """
    cfg = parse_experiment_text("\n".join(line.strip() for line in text.splitlines()))
    assert cfg.constants.s0 == 1e-6
    assert cfg.estimates.eps_values == [1e-3, 1e-5]
    assert cfg.simulate.snapshot_times == []
    again = parse_experiment_text(serialize_experiment_config(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)
    assert config_hash(cfg) != config_hash(ExperimentConfig())
    with tempfile.TemporaryDirectory() as tmp:
        path = write_experiment_config(cfg, Path(tmp) / "exp.cfg")
        assert load_experiment_config(path) == cfg
    print(f"✓ Canonical serialization round trips, hash {config_hash(cfg)[:12]}")


def test_experiment_errors():
    with pytest.raises(ConfigurationError, match="Unknown section"):
        parse_experiment_text("[plots]\nwidth = 3\n")
    with pytest.raises(ConfigurationError, match="Invalid experiment configuration"):
        parse_experiment_text("[constants]\nbogus = 1\n")
    with pytest.raises(ConfigurationError, match="Invalid experiment configuration"):
        parse_experiment_text("[constants]\nC = 0.5\n")
    with pytest.raises(ConfigurationError, match="must not be empty"):
        parse_experiment_text("[constants]\nI =\n")
    with pytest.raises(ConfigurationError, match="Failed to parse"):
        parse_experiment_text("C = 1\n")
    with pytest.raises(ConfigurationError, match="not found"):
        load_experiment_config("/nonexistent/exp.cfg")
    print("✓ Unknown sections, keys and invalid values raise ConfigurationError")


def main():
    """Run all tests."""
    print("=== Configuration Tests ===\n")
    tests = [obj for name, obj in sorted(globals().items()) if name.startswith("test_") and callable(obj)]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            failed += 1
            print(f"✗ {test.__name__} FAILED: {e}")
    print(f"\nPassed: {len(tests) - failed}, Failed: {failed}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
