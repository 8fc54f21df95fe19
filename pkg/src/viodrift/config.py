"""Plain-text ``key = value`` configuration.

One assignment per line, ``#`` starts a comment. Top-level scenario fields are
addressed by name (``speed = 8``); nested records by ``section.field``
(``detector.sigma_p = 0.01``). Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .evaluation import SweepGrid
from .simulator import ScenarioConfig

_DEFAULT = ScenarioConfig()
SECTIONS = tuple(f.name for f in dataclasses.fields(ScenarioConfig)
                 if dataclasses.is_dataclass(getattr(_DEFAULT, f.name)))
TOP_LEVEL = tuple(f.name for f in dataclasses.fields(ScenarioConfig) if f.name not in SECTIONS)


def parse_kv(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: missing key")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}", key=key)
        values[key] = value
    return values


def _convert(key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"invalid value for {key!r}: {raw!r}", key=key) from None


def scenario_from_dict(values: dict[str, str], base: ScenarioConfig | None = None) -> ScenarioConfig:
    base = base or ScenarioConfig()
    top: dict[str, object] = {}
    nested: dict[str, dict[str, object]] = {}
    for key, raw in values.items():
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigurationError(f"unknown config key {key!r}", key=key)
            current = getattr(base, section)
            if name not in {f.name for f in dataclasses.fields(current)}:
                raise ConfigurationError(f"unknown config key {key!r}", key=key)
            nested.setdefault(section, {})[name] = _convert(key, raw, getattr(current, name))
        else:
            if key not in TOP_LEVEL:
                raise ConfigurationError(f"unknown config key {key!r}", key=key)
            top[key] = _convert(key, raw, getattr(base, key))

    # the drift model steps once per odometry sample unless told otherwise
    if "rates" in nested and "vio" in nested["rates"] and "dt" not in nested.get("drift", {}):
        nested.setdefault("drift", {})["dt"] = 1.0 / float(nested["rates"]["vio"])

    sections = {}
    for section, fields in nested.items():
        try:
            sections[section] = dataclasses.replace(getattr(base, section), **fields)
        except ConfigurationError as exc:
            bad = next((f"{section}.{n}" for n in fields if n in str(exc)), section)
            raise ConfigurationError(f"invalid value for {bad!r}: {exc}", key=bad) from None
    try:
        return dataclasses.replace(base, **top, **sections)
    except ConfigurationError as exc:
        bad = next((k for k in top if k in str(exc)), None)
        raise ConfigurationError(f"invalid scenario config: {exc}", key=bad) from None


def load_scenario(path: str | Path | None, base: ScenarioConfig | None = None) -> ScenarioConfig:
    if path is None:
        return base or ScenarioConfig()
    text = Path(path).read_text(encoding="utf-8")
    config = scenario_from_dict(parse_kv(text), base)
    if config.track and not Path(config.track).is_absolute():
        # track paths are relative to the config file
        resolved = (Path(path).parent / config.track).resolve()
        config = dataclasses.replace(config, track=str(resolved))
    return config


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else repr(float(value))
    return str(value)


def dump_scenario(config: ScenarioConfig) -> str:
    """Every addressable key with its value; floats round-trip exactly."""
    lines = []
    for name in TOP_LEVEL:
        lines.append(f"{name} = {_fmt(getattr(config, name))}")
    for section in SECTIONS:
        record = getattr(config, section)
        lines.append("")
        for f in dataclasses.fields(record):
            lines.append(f"{section}.{f.name} = {_fmt(getattr(record, f.name))}")
    return "\n".join(lines) + "\n"


GRID_KEYS = ("delays", "position_noises", "yaw_noises", "trials", "mode")


def grid_from_dict(values: dict[str, str], base: SweepGrid | None = None) -> SweepGrid:
    base = base or SweepGrid()
    kwargs: dict[str, object] = {}
    for key, raw in values.items():
        if key not in GRID_KEYS:
            raise ConfigurationError(f"unknown grid key {key!r}", key=key)
        if key in ("delays", "position_noises", "yaw_noises"):
            try:
                kwargs[key] = tuple(float(v) for v in raw.replace(",", " ").split())
            except ValueError:
                raise ConfigurationError(f"invalid value for {key!r}: {raw!r}", key=key) from None
        elif key == "trials":
            kwargs[key] = _convert(key, raw, 0)
        else:
            kwargs[key] = raw
    try:
        return dataclasses.replace(base, **kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"invalid grid: {exc}", key=exc.key) from None


def load_grid(path: str | Path | None) -> SweepGrid:
    if path is None:
        return SweepGrid()
    return grid_from_dict(parse_kv(Path(path).read_text(encoding="utf-8")))
