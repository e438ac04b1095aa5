"""YAML scenario files <-> ScenarioConfig dataclasses.

Every key must name a dataclass field; unknown keys and type mismatches are
reported with their dotted path. Omitted keys keep the dataclass defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
import types
import typing
from pathlib import Path

import yaml

from .sim import ConfigError, ScenarioConfig, validate

SCHEMA_VERSION = 1


def _strip_optional(tp):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0], True
    return tp, False


def _convert(value, tp, path: str, problems: list):
    tp, optional = _strip_optional(tp)
    if value is None:
        if optional:
            return None
        problems.append((path, "must not be null"))
        return None
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path, problems)
    origin = typing.get_origin(tp)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            problems.append((path, f"expected a list, got {type(value).__name__}"))
            return None
        args = typing.get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(v, args[0], f"{path}[{i}]", problems) for i, v in enumerate(value))
        if len(value) != len(args):
            problems.append((path, f"expected {len(args)} items, got {len(value)}"))
            return None
        return tuple(_convert(v, a, f"{path}[{i}]", problems) for i, (v, a) in enumerate(zip(value, args)))
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append((path, f"expected a number, got {value!r}"))
            return None
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append((path, f"expected an integer, got {value!r}"))
            return None
        return value
    if tp is str:
        if not isinstance(value, str):
            problems.append((path, f"expected a string, got {value!r}"))
            return None
        return value
    return value


def _build(cls, data, path: str, problems: list):
    if not isinstance(data, dict):
        problems.append((path or "<root>", f"expected a mapping, got {type(data).__name__}"))
        return cls()
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            problems.append((f"{path}.{key}" if path else str(key), "unknown key"))
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            sub = f"{path}.{f.name}" if path else f.name
            kwargs[f.name] = _convert(data[f.name], hints[f.name], sub, problems)
    if problems:
        return None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append((path or "<root>", str(exc)))
        return None


def from_dict(data) -> ScenarioConfig:
    problems: list = []
    if isinstance(data, dict) and data.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError([("version", f"unsupported version {data.get('version')!r}, expected {SCHEMA_VERSION}")])
    cfg = _build(ScenarioConfig, data, "", problems)
    if problems:
        raise ConfigError(problems)
    validate(cfg)
    return cfg


def to_dict(cfg) -> dict:
    def plain(v):
        if dataclasses.is_dataclass(v):
            return {f.name: plain(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, (tuple, list)):
            return [plain(x) for x in v]
        return v

    return plain(cfg)


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def loads(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<document>", f"not valid YAML: {exc}")]) from exc
    return from_dict(data if data is not None else {})


def load(path) -> ScenarioConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(dumps(cfg).encode("utf-8")).hexdigest()
