"""
Experiment configuration files.

Experiment files are flat, commented, sectioned key=value text::

    # default battery
    [constants]
    C = 4.0
    s0 = auto

    [estimates]
    eps_values = 1e-3, 1e-4

Sections map onto the fields of ExperimentConfig. Lists are comma
separated; ``none``, ``auto`` and empty values mean "unset". The canonical
serialization sorts sections and keys and writes floats by ``repr`` so that
parse -> serialize -> parse is the identity and the config hash is stable.
"""

import configparser
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import ValidationError

from core.interfaces import ConfigurationError
from core.schemas import ExperimentConfig

logger = logging.getLogger(__name__)

UNSET_TOKENS = ("", "none", "auto", "null")


def _convert(raw: str) -> Any:
    value = raw.strip()
    if value.lower() in UNSET_TOKENS:
        return None
    return value


def parse_experiment_text(text: str, source: str = "<string>") -> ExperimentConfig:
    """
    Parse experiment file content into a validated ExperimentConfig.

    Args:
        text: File content
        source: Name used in error messages

    Returns:
        Validated experiment configuration

    Raises:
        ConfigurationError: On syntax errors, unknown sections or keys, or invalid values
    """
    parser = configparser.ConfigParser(
        interpolation=None,
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#",),
        default_section="__defaults__",
    )
    parser.optionxform = str  # keys are case-sensitive (C, I, CI)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Failed to parse experiment file {source}: {e}")

    known = set(ExperimentConfig.model_fields)
    sections: Dict[str, Dict[str, Any]] = {}
    for name in parser.sections():
        if name not in known:
            raise ConfigurationError(f"Unknown section [{name}] in {source}")
        values = {}
        for key, raw in parser.items(name):
            value = _convert(raw)
            if value is None:
                value = _unset_value(name, key, source)
            values[key] = value
        sections[name] = values

    try:
        return ExperimentConfig.model_validate(sections)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment configuration in {source}: {e}")


def _unset_value(section: str, key: str, source: str) -> Any:
    """Value of an unset key: None for optional fields, [] for lists."""
    model = ExperimentConfig.model_fields[section].annotation
    fields = getattr(model, "model_fields", {})
    if key not in fields:
        return None  # validation reports the unknown key
    field = fields[key]
    if "List" in str(field.annotation):
        return []
    if not field.is_required() and field.default is None:
        return None
    raise ConfigurationError(f"Key '{key}' in [{section}] of {source} must not be empty")


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load and validate an experiment configuration file.

    Raises:
        ConfigurationError: If the file is missing, unreadable or invalid
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigurationError(f"Experiment file not found: {config_path}")
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Failed to read experiment file {config_path}: {e}")
    cfg = parse_experiment_text(text, source=str(config_path))
    logger.info(f"Loaded experiment configuration {config_path} (hash {config_hash(cfg)[:12]})")
    return cfg


def format_value(value: Any) -> str:
    """Canonical text form of a configuration value."""
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def serialize_experiment_config(cfg: ExperimentConfig) -> str:
    """Canonical serialization: sorted sections and keys, floats by repr."""
    lines = []
    dumped = cfg.model_dump()
    for section in sorted(dumped):
        lines.append(f"[{section}]")
        for key in sorted(dumped[section]):
            lines.append(f"{key} = {format_value(dumped[section][key])}")
        lines.append("")
    return "\n".join(lines)


def write_experiment_config(cfg: ExperimentConfig, path: Union[str, Path]) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(serialize_experiment_config(cfg), encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Failed to write experiment file {target}: {e}")
    return target


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(serialize_experiment_config(cfg).encode("utf-8")).hexdigest()
