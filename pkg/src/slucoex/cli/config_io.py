"""Flat ``key = value`` configuration files.

One setting per line, ``#`` starts a comment, blank lines are ignored. Keys are
the field names of :class:`RunConfig`. Values are parsed according to the
field's type: ``none`` clears an optional value, booleans accept
``true/false/1/0/yes/no`` and tuples are comma separated.
"""

from __future__ import annotations

import os
import typing
from dataclasses import fields
from typing import Any, Mapping, Optional

from ..config import CONFIG_KEYS, ConfigError, RunConfig

_TYPES = typing.get_type_hints(RunConfig)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def convert(key: str, text: str) -> Any:
    """Parse one textual value into the type of the config field ``key``."""
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    tp = _TYPES[key]
    text = text.strip()
    optional = typing.get_origin(tp) is typing.Union and type(None) in typing.get_args(tp)
    if optional:
        if text.lower() in ("none", ""):
            return None
        tp = next(a for a in typing.get_args(tp) if a is not type(None))
    try:
        if tp is bool:
            return _bool(text)
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if tp is tuple:
            return tuple(int(x) for x in text.split(",") if x.strip())
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def parse_pairs(text: str, source: str = "<string>") -> dict[str, str]:
    """Split a flat key-value document into raw ``{key: text}`` pairs."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_config(path: Optional[str | os.PathLike] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Build a validated config from an optional file plus overrides.

    Overrides (typically command-line flags) win over file values. They may be
    strings, which are converted like file values, or already typed values.
    """
    values: dict[str, Any] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = parse_pairs(fh.read(), str(path))
        for key, text in raw.items():
            values[key] = convert(key, text)
    for key, value in (overrides or {}).items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = convert(key, value) if isinstance(value, str) else value
    return RunConfig(**values)


def format_config(cfg: RunConfig) -> str:
    """Render a config back into the file format (round-trips through ``parse_config``)."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "none"
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, tuple):
            text = ",".join(str(x) for x in v)
        else:
            text = repr(v) if isinstance(v, float) else str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
