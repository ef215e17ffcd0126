"""Sectioned run configuration with CLI > file > default precedence."""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from src.model.config import ModelConfig, TrainConfig
from src.utils.exceptions import ConfigError
from src.utils.io import atomic_write
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

SECTIONS = ("run", "data", "model", "train", "decode", "eval")
SNAPSHOT_NAME = "config_snapshot.yaml"


class RunConfig:
    """Flat key/value sections (`run`, `data`, `model`, `train`, `decode`, `eval`)."""

    def __init__(self, sections: Optional[Mapping[str, Mapping[str, Any]]] = None):
        self.sections: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
        for name, values in (sections or {}).items():
            self._check_section(name, values)
            self.sections[name].update(values)

    @staticmethod
    def _check_section(name: str, values: Any) -> None:
        if name not in SECTIONS:
            raise ConfigError(f"unknown config section {name!r}; expected one of {SECTIONS}")
        if not isinstance(values, Mapping):
            raise ConfigError(f"config section {name!r} must be a key/value map")
        for key, value in values.items():
            if isinstance(value, Mapping):
                raise ConfigError(f"config key {name}.{key} must be a plain value, not a nested map")

    @classmethod
    def load(cls, path: Optional[Union[str, Path]]) -> "RunConfig":
        if path is None:
            return cls()
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from e
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: expected sections at the top level")
        logger.info(f"Loaded run configuration from {path}")
        return cls(data)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.sections[section].get(key, default)

    def resolve(self, section: str, key: str, cli_value: Any, default: Any = None) -> Any:
        """CLI value if given, else the file value, else `default`; the result is recorded."""
        if cli_value is not None:
            value = cli_value
        else:
            value = self.sections[section].get(key, default)
        if value is not None:
            self.sections[section][key] = value
        return value

    def update(self, section: str, values: Mapping[str, Any]) -> None:
        """Overlay non-None CLI values onto a section."""
        for key, value in values.items():
            if value is not None:
                self.sections[section][key] = value

    def model_config(self) -> ModelConfig:
        return ModelConfig.create(**self.sections["model"])

    def train_config(self) -> TrainConfig:
        return TrainConfig.create(**self.sections["train"])

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        return {name: dict(values) for name, values in self.sections.items() if values}

    def snapshot(self, out_dir: Union[str, Path]) -> Path:
        """Write the effective configuration next to the run's outputs."""
        path = Path(out_dir) / SNAPSHOT_NAME
        with atomic_write(path) as f:
            yaml.safe_dump(_plain(self.as_dict()), f, sort_keys=True, allow_unicode=True)
        return path


def _plain(value: Any) -> Any:
    """YAML-safe copy: paths become strings, tuples become lists."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value
