"""Config file parsing, env overrides, precedence."""

import json

import pytest

from nudgeloop.config import AppConfig, load_config
from nudgeloop.mdp import ConfigurationError


class TestDefaults:
    def test_baseline(self):
        cfg = AppConfig()
        assert cfg.mode == "pooled"
        assert cfg.k == 2
        assert cfg.exploration_days == 7
        assert cfg.seed == 0
        assert cfg.api_token is None
        assert cfg.schedule.decision_times == ("10:00:00", "14:00:00", "21:00:00")
        assert cfg.solver.gamma == 0.95
        assert cfg.solver.epsilon == 0.1

    def test_round_trip(self):
        cfg = AppConfig(seed=9, mode="grouped", k=3)
        again = AppConfig.from_dict(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()


class TestFromDict:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            AppConfig.from_dict({"sedd": 3})

    def test_nested_sections(self):
        cfg = AppConfig.from_dict(
            {
                "seed": 4,
                "schedule": {"training_time": "23:00:00", "clustering_day": 8},
                "solver": {"gamma": 0.9},
                "reward": {"w_read": 0.7, "w_ratings": 0.3},
            }
        )
        assert cfg.schedule.training_time == "23:00:00"
        assert cfg.schedule.clustering_day == 8
        assert cfg.solver.gamma == 0.9
        assert cfg.reward.w_read == 0.7

    def test_nested_validation_propagates(self):
        with pytest.raises(ValueError):
            AppConfig.from_dict({"solver": {"gamma": 1.5}})


class TestLoadConfig:
    def test_missing_path_gives_defaults(self):
        assert load_config(None).to_dict() == AppConfig().to_dict()

    def test_file_values(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 77, "mode": "separate"}))
        cfg = load_config(path)
        assert cfg.seed == 77
        assert cfg.mode == "separate"

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 77, "data_dir": "/from/file"}))
        monkeypatch.setenv("NUDGELOOP_SEED", "5")
        monkeypatch.setenv("NUDGELOOP_DATA_DIR", "/from/env")
        cfg = load_config(path)
        assert cfg.seed == 5
        assert cfg.data_dir == "/from/env"

    def test_env_token_and_clock(self, monkeypatch):
        monkeypatch.setenv("NUDGELOOP_TOKEN", "hunter2")
        monkeypatch.setenv("NUDGELOOP_CLOCK", "wall")
        cfg = load_config(None)
        assert cfg.api_token == "hunter2"
        assert cfg.schedule.clock == "wall"

    def test_env_mode_and_k(self, monkeypatch):
        monkeypatch.setenv("NUDGELOOP_MODE", "grouped")
        monkeypatch.setenv("NUDGELOOP_K", "4")
        cfg = load_config(None)
        assert cfg.mode == "grouped"
        assert cfg.k == 4
