"""Run configuration: flag > TOML file > built-in default precedence,
with the MAJORANT_SEED environment variable overriding the seed."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "load_config_file", "resolve"]

SEED_ENV = "MAJORANT_SEED"

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "threads": os.cpu_count() or 1,
    "format": "json",
    "b": 1.0,
    "z": 1.0,
    "horizon": 1.0,
    "dt": 1e-3,
    "n": 100_000,
}


@dataclass
class RunConfig:
    """Resolved configuration of one CLI run."""

    command: str
    seed: int
    threads: int
    format: str
    out: str | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise ValueError("format must be 'csv' or 'json'")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def describe(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "seed": self.seed,
            "threads": self.threads,
            "format": self.format,
            **{k: v for k, v in sorted(self.params.items()) if v is not None},
        }


def load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def resolve(key: str, flag_value, file_values: dict[str, Any], default=None):
    """One value under the precedence flags > file > defaults.

    The seed additionally honors the MAJORANT_SEED environment variable,
    which takes priority over everything (CI sweep hook).
    """
    if key == "seed" and os.environ.get(SEED_ENV):
        return int(os.environ[SEED_ENV])
    if flag_value is not None:
        return flag_value
    if key in file_values:
        return file_values[key]
    if default is not None:
        return default
    return DEFAULTS.get(key)
