"""Run configuration files (YAML)."""
import logging
from pathlib import Path
from typing import Optional, Union

import yaml
from pydantic import ValidationError

from gwrap.api.models import RunConfig
from gwrap.services.errors import ConfigError

logger = logging.getLogger(__name__)


def config_from_dict(data: Optional[dict]) -> RunConfig:
    """Validate a mapping into a RunConfig; unknown keys are rejected."""
    if data is None:
        return RunConfig()
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(p) for p in first.get("loc", ()))
        raise ConfigError(f"invalid config key '{key}': {first.get('msg')}", key=key, errors=exc.error_count())


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read a YAML run config; defaults when no path is given.

    Raises:
        ConfigError: Missing file, invalid YAML, unknown or invalid keys
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = yaml.safe_load(file)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}")
    config = config_from_dict(data)
    logger.debug(f"Loaded run config from {path}")
    return config


def dump_config(config: RunConfig, path: Optional[Union[str, Path]] = None) -> str:
    """YAML text of a config, also written to path when given."""
    text = yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
    if path is not None:
        with open(path, "w", encoding="utf-8") as file:
            file.write(text)
        logger.info(f"Wrote run config to {path}")
    return text
