"""INI configuration files for experiments.

One section per component, keys named after the dataclass fields::

    [experiment]
    sigma_list = 0.5, 1, 2, 3, 4, 5
    episodes_per_sigma = 200
    mode = with_obstacles

    [planner]
    prune_threshold = 0.5

Missing sections or keys keep their defaults. Unknown sections and keys are
rejected so that typos do not silently fall back to a default.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from pathlib import Path
from typing import Any

from .belief import GrounderConfig
from .executor import ExecutorConfig
from .experiments import ExperimentConfig, Method, Mode, ObstacleKind, SceneParams
from .planner import PlannerConfig
from .simworld import WorldParams

__all__ = ["ConfigError", "load_config", "loads_config", "dump_config", "dumps_config"]

_SECTIONS = {
    "planner": PlannerConfig,
    "executor": ExecutorConfig,
    "grounder": GrounderConfig,
    "world": WorldParams,
    "scene": SceneParams,
}
_EXPERIMENT_KEYS = ("sigma_list", "episodes_per_sigma", "mode", "method", "master_seed")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_kinds(text: str) -> tuple[ObstacleKind, ...]:
    kinds = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        parts = item.split(":")
        if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] not in ("movable", "fixed")):
            raise ConfigError(f"obstacle kind must look like name:radius[:movable|fixed], got {item!r}")
        kinds.append(ObstacleKind(parts[0], float(parts[1]), len(parts) == 2 or parts[2] == "movable"))
    return tuple(kinds)


def _format_kinds(kinds) -> str:
    return ", ".join(f"{k.name}:{k.radius:g}:{'movable' if k.movable else 'fixed'}" for k in kinds)


def _convert(section: str, key: str, default: Any, raw: str, parser: configparser.ConfigParser):
    try:
        if key == "obstacle_kinds":
            return _parse_kinds(raw)
        if key in ("sigma_list", "home"):
            return _floats(raw)
        if key == "mode":
            return Mode(raw.strip())
        if key == "method":
            return Method(raw.strip())
        if isinstance(default, bool):
            return parser.getboolean(section, key)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None
    raise ConfigError(f"[{section}] {key}: unsupported field type")


def _build(cls, section: str, parser: configparser.ConfigParser):
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    if not parser.has_section(section):
        return defaults
    kwargs = {}
    for key, raw in parser.items(section):
        if key not in names:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        kwargs[key] = _convert(section, key, getattr(defaults, key), raw, parser)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def loads_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    unknown = set(parser.sections()) - set(_SECTIONS) - {"experiment"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    nested = {name: _build(cls, name, parser) for name, cls in _SECTIONS.items()}
    top = {}
    if parser.has_section("experiment"):
        base = ExperimentConfig()
        for key, raw in parser.items("experiment"):
            if key not in _EXPERIMENT_KEYS:
                raise ConfigError(f"unknown key {key!r} in [experiment]")
            top[key] = _convert("experiment", key, getattr(base, key), raw, parser)
    try:
        return ExperimentConfig(**top, **nested)
    except ValueError as exc:
        raise ConfigError(f"[experiment] {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text)


def _fmt(value) -> str:
    if isinstance(value, (Mode, Method)):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple) and value and isinstance(value[0], ObstacleKind):
        return _format_kinds(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def dumps_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser["experiment"] = {k: _fmt(getattr(cfg, k)) for k in _EXPERIMENT_KEYS}
    for name in _SECTIONS:
        sub = getattr(cfg, name)
        parser[name] = {f.name: _fmt(getattr(sub, f.name)) for f in dataclasses.fields(sub)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def dump_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps_config(cfg), encoding="utf-8")
    return path
