"""JSON run configuration shared by the ``train`` and ``trials`` commands."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .exceptions import InvalidArgument
from .pipeline import FeatureConfig
from .training import TrainConfig


@dataclass(frozen=True)
class CliConfig:
    data_path: str = "panel.csv"
    out_dir: str = "out"
    train: TrainConfig = field(default_factory=TrainConfig)
    lag: int = 5
    rolling_mean_window: int = 3
    rolling_std_window: int = 4
    n_trials: int = 50
    base_seed: int = 0

    def __post_init__(self):
        for name, minimum in (("lag", 1), ("rolling_mean_window", 1), ("rolling_std_window", 2),
                              ("n_trials", 1)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                raise InvalidArgument(f"{name}: must be an integer >= {minimum}, got {value!r}")
        if not isinstance(self.base_seed, int) or isinstance(self.base_seed, bool):
            raise InvalidArgument(f"base_seed: must be an integer, got {self.base_seed!r}")

    @property
    def features(self) -> FeatureConfig:
        return FeatureConfig(self.lag, self.rolling_mean_window, self.rolling_std_window)

    @classmethod
    def from_dict(cls, data: dict) -> "CliConfig":
        if not isinstance(data, dict):
            raise InvalidArgument("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config field(s): {', '.join(sorted(unknown))}")
        data = dict(data)
        train = data.pop("train", {})
        if not isinstance(train, dict):
            raise InvalidArgument("train: must be a JSON object")
        return cls(train=TrainConfig.from_dict(train), **data)

    @classmethod
    def load(cls, path: str | Path) -> "CliConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)
