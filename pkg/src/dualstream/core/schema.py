"""Dictionary-to-dataclass parsing shared by every configuration section.

Config sections are plain dataclasses. Files may spell keys either
``hyphen-case`` or ``snake_case``; values are coerced to the type of the
field's default so that YAML ``1e-4`` strings, JSON ints for float fields and
lists for tuple fields all land with the expected type.
"""

import dataclasses
from enum import Enum
from pathlib import Path
from typing import Any, TypeVar

from dualstream.core.utils import DualStreamError

T = TypeVar("T")


class ConfigError(DualStreamError):
    """Raised when a configuration file, override or section is invalid."""

    pass


def normalize_key(key: str) -> str:
    return str(key).strip().replace("-", "_")


def _default_of(field: dataclasses.Field[Any]) -> Any:
    if field.default is not dataclasses.MISSING:
        return field.default
    if field.default_factory is not dataclasses.MISSING:
        return field.default_factory()
    return None


def coerce_value(value: Any, default: Any, name: str) -> Any:
    """
    Coerce a raw config value to the type of a field's default.

    Args:
        value: Raw value from YAML/JSON/CLI.
        default: The field's default value (its type drives coercion).
        name: Dotted field name for error messages.

    Returns:
        The coerced value.

    Raises:
        ConfigError: If the value cannot be converted.
    """
    if value is None or default is None:
        return value
    if dataclasses.is_dataclass(default) and isinstance(value, dict):
        return dataclass_from_dict(type(default), value, name)
    try:
        if isinstance(default, Enum):
            return type(default)(value)
        if isinstance(default, Path):
            return Path(value)
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("true", "1", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"expected an integer, got {value}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, str):
            return str(value)
        if isinstance(default, tuple):
            return tuple(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for '{name}': {value!r} ({e})") from e
    return value


def dataclass_from_dict(cls: type[T], data: dict[str, Any] | None, section: str) -> T:
    """
    Build a config dataclass from a dictionary.

    Args:
        cls: Dataclass type to build.
        data: Raw mapping (may be None for "all defaults").
        section: Section name used in error messages.

    Returns:
        An instance of cls.

    Raises:
        ConfigError: On unknown keys, non-mapping input or bad values.
    """
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"Section '{section}' must be a mapping, got {type(data).__name__}")

    fields = {f.name: f for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    kwargs: dict[str, Any] = {}
    for raw_key, value in data.items():
        key = normalize_key(raw_key)
        if key not in fields:
            raise ConfigError(
                f"Unknown key '{raw_key}' in section '{section}'. "
                f"Known keys: {', '.join(sorted(fields))}"
            )
        kwargs[key] = coerce_value(value, _default_of(fields[key]), f"{section}.{key}")

    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid section '{section}': {e}") from e


def _plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return dataclass_to_dict(value)
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and hasattr(type(value), "__members__"):
        return value.value
    return value


def dataclass_to_dict(instance: Any) -> dict[str, Any]:
    """Convert a config dataclass to plain dicts and lists (YAML/JSON safe)."""
    return {f.name: _plain(getattr(instance, f.name)) for f in dataclasses.fields(instance)}
