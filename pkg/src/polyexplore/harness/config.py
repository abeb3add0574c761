"""Run configuration as plain JSON-able dicts, with dotted-key overrides.

A config document mirrors ``RunConfig``: one section per subsystem
(``sensor``, ``odom``, ``slam``, ``controller``, ``explore``).  Overrides use
dotted keys such as ``sensor.illumination`` or ``sensor.ranges.BrightSun``.
Unknown keys and values of the wrong type are rejected before any run starts.
"""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import fields

from ..explore import ControllerLimits, ExploreConfig, RunConfig
from ..loc import OdomConfig, SlamConfig
from ..sensor import SensorConfig

SCHEMA_VERSION = 1

SECTIONS = {
    "sensor": SensorConfig,
    "odom": OdomConfig,
    "slam": SlamConfig,
    "controller": ControllerLimits,
    "explore": ExploreConfig,
}


class ConfigError(ValueError):
    """Invalid configuration document or override."""


def _plain(v):
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, dict):
        return {_plain(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    return v


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for name in SECTIONS:
        sec = getattr(cfg, name)
        out[name] = {f.name: _plain(getattr(sec, f.name)) for f in fields(sec)}
    return out


def default_config_dict() -> dict:
    return config_to_dict(RunConfig())


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(key: str, old, new):
    """Raise ConfigError unless ``new`` may replace ``old``."""
    if isinstance(old, bool):
        ok = isinstance(new, bool)
    elif isinstance(old, int):
        ok = isinstance(new, int) and not isinstance(new, bool)
    elif isinstance(old, float):
        ok = _is_number(new)
    elif isinstance(old, str) or old is None:
        ok = new is None or isinstance(new, str)
    elif isinstance(old, list):
        ok = isinstance(new, list) and len(new) == len(old) and all(_is_number(x) for x in new)
    elif isinstance(old, dict):
        ok = isinstance(new, dict)
    else:
        ok = False
    if not ok:
        raise ConfigError(f"{key}: expected a value like {old!r}, got {new!r}")


def _merge(dst: dict, src: dict, prefix: str):
    for k, v in src.items():
        key = f"{prefix}{k}"
        if k not in dst:
            raise ConfigError(f"unknown config key '{key}'")
        _check_type(key, dst[k], v)
        if isinstance(dst[k], dict):
            _merge(dst[k], v, key + ".")
        else:
            dst[k] = v


def apply_overrides(doc: dict, overrides: dict) -> dict:
    """Copy of ``doc`` with each ``{dotted.key: value}`` applied."""
    out = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        if not isinstance(dotted, str) or not dotted:
            raise ConfigError(f"bad override key {dotted!r}")
        parts = dotted.split(".")
        node = out
        for depth, p in enumerate(parts[:-1]):
            if not isinstance(node, dict) or p not in node:
                raise ConfigError(f"unknown config key '{'.'.join(parts[:depth + 1])}'")
            node = node[p]
        last = parts[-1]
        if not isinstance(node, dict) or last not in node:
            raise ConfigError(f"unknown config key '{dotted}'")
        _check_type(dotted, node[last], value)
        if isinstance(node[last], dict):
            _merge(node[last], value, dotted + ".")
        else:
            node[last] = copy.deepcopy(value)
    return out


def config_from_dict(doc: dict) -> RunConfig:
    """Build a ``RunConfig``; missing keys keep their defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    schema = doc.pop("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {schema!r}")
    full = default_config_dict()
    for k in doc:
        if k not in SECTIONS:
            raise ConfigError(f"unknown config section '{k}'")
    _merge(full, doc, "")
    try:
        return RunConfig(**{name: cls(**full[name]) for name, cls in SECTIONS.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_value(text: str):
    """Interpret a command-line value: JSON if it parses, else a bare string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
