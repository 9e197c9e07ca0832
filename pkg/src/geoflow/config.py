"""Flat experiment configuration: `section.key = value` lines.

One statement per line; `#` starts a comment; keys are dotted paths.
Validation failures name the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    values: dict[str, str] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)
    path: str = "<config>"

    def _fail(self, key: str, msg: str):
        line = self.lines.get(key)
        where = f"{self.path}:{line}" if line else self.path
        raise ConfigError(f"{where}: {key}: {msg}")

    def get(self, key: str, default=None, required: bool = False) -> str | None:
        if key in self.values:
            return self.values[key]
        if required:
            raise ConfigError(f"{self.path}: missing required key {key!r}")
        return default

    def get_float(self, key: str, default: float | None = None, required: bool = False):
        raw = self.get(key, None, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self._fail(key, f"expected a number, got {raw!r}")

    def get_int(self, key: str, default: int | None = None, required: bool = False):
        raw = self.get(key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self._fail(key, f"expected an integer, got {raw!r}")

    def get_choice(self, key: str, choices, default=None, required: bool = False):
        raw = self.get(key, default, required)
        if raw is not None and raw not in choices:
            self._fail(key, f"must be one of {sorted(choices)}, got {raw!r}")
        return raw


def parse_config(text: str, path: str = "<config>") -> Config:
    cfg = Config(path=path)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key or not val:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key in cfg.values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        cfg.values[key] = val
        cfg.lines[key] = lineno
    return cfg


def load_config(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), path)
