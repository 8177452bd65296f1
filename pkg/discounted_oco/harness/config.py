"""
Loading experiment configs from TOML files.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from ..exceptions import ConfigError
from ..utils.validation import ExperimentConfig

logger = logging.getLogger(__name__)


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate a config mapping.

    Raises:
        ConfigError: wrapping the validation errors
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config: {e}") from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate a TOML (or JSON snapshot) config file.

    Raises:
        ConfigError: if the file is missing, unparsable or invalid
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        if path.suffix == ".json":
            return ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Cannot parse {path}: {e}") from e
    logger.debug("Loaded config %s", path)
    return parse_config(data)


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    out: Optional[str] = None,
) -> ExperimentConfig:
    """Return a re-validated copy with command-line overrides applied"""
    data = config.model_dump(mode="json")
    if seed is not None:
        data["seed"] = seed
    if trials is not None:
        data["trials"] = trials
    if out is not None:
        data.setdefault("outputs", {})["directory"] = str(out)
    return parse_config(data)
