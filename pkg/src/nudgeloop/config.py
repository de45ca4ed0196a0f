"""Application configuration: JSON file plus NUDGELOOP_* environment overrides.

Precedence: defaults < config file < environment. The schema is documented in
the README; unknown file keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .mdp import ConfigurationError
from .scheduler import ScheduleConfig
from .solver import SolverConfig
from .states import RewardConfig

_ENV_PREFIX = "NUDGELOOP_"


@dataclass
class AppConfig:
    data_dir: str = "./nudgeloop-data"
    start_date: str = "2026-01-05"
    seed: int = 0
    mode: str = "pooled"
    k: int = 2
    exploration_days: int = 7
    host: str = "127.0.0.1"
    port: int = 8080
    api_token: str | None = None
    catalog_path: str | None = None
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)

    def to_dict(self) -> dict:
        return {
            "data_dir": self.data_dir,
            "start_date": self.start_date,
            "seed": self.seed,
            "mode": self.mode,
            "k": self.k,
            "exploration_days": self.exploration_days,
            "host": self.host,
            "port": self.port,
            "api_token": self.api_token,
            "catalog_path": self.catalog_path,
            "schedule": self.schedule.to_dict(),
            "solver": self.solver.to_dict(),
            "reward": self.reward.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AppConfig":
        known = {
            "data_dir", "start_date", "seed", "mode", "k", "exploration_days",
            "host", "port", "api_token", "catalog_path", "schedule", "solver", "reward",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in d.items() if k not in ("schedule", "solver", "reward")}
        if "schedule" in d:
            kwargs["schedule"] = ScheduleConfig.from_dict(d["schedule"])
        if "solver" in d:
            kwargs["solver"] = SolverConfig.from_dict(d["solver"])
        if "reward" in d:
            kwargs["reward"] = RewardConfig.from_dict(d["reward"])
        return cls(**kwargs)


def _apply_env(cfg: AppConfig) -> AppConfig:
    env = os.environ
    get = lambda name: env.get(_ENV_PREFIX + name)
    if get("DATA_DIR"):
        cfg.data_dir = get("DATA_DIR")
    if get("START_DATE"):
        cfg.start_date = get("START_DATE")
    if get("SEED"):
        cfg.seed = int(get("SEED"))
    if get("MODE"):
        cfg.mode = get("MODE")
    if get("K"):
        cfg.k = int(get("K"))
    if get("EXPLORATION_DAYS"):
        cfg.exploration_days = int(get("EXPLORATION_DAYS"))
    if get("HOST"):
        cfg.host = get("HOST")
    if get("PORT"):
        cfg.port = int(get("PORT"))
    if get("TOKEN"):
        cfg.api_token = get("TOKEN")
    if get("CATALOG"):
        cfg.catalog_path = get("CATALOG")
    if get("CLOCK"):
        cfg.schedule = ScheduleConfig.from_dict({**cfg.schedule.to_dict(), "clock": get("CLOCK")})
    return cfg


def load_config(path: str | os.PathLike | None = None) -> AppConfig:
    cfg = AppConfig()
    if path is not None:
        with open(Path(path), encoding="utf-8") as fh:
            cfg = AppConfig.from_dict(json.load(fh))
    return _apply_env(cfg)
