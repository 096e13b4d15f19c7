"""Configuration resolution for the CLI and service.

Effective values are merged with fixed precedence:

    built-in defaults  <  config file (key = value)  <  environment
    (GEOCHALLENGE_*)  <  command-line flags

`dump` renders the effective configuration in the same key = value format
the config file uses, so any run is reproducible from its printout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

ENV_PREFIX = "GEOCHALLENGE_"


def parse_kv(text: str) -> dict[str, str]:
    """Parse a flat `key = value` file; '#' starts a comment."""

    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class CliConfig:
    """Every pipeline/engine/analysis knob in one resolved view."""

    radius_km: float = 12.0
    margin_m: float = 200.0
    questions: int = 10
    required_correct: int = 7
    dwell_min: float = 5.0          # minutes
    unique_m: float = 400.0
    max_dwell_h: float = 5.0
    sample_interval_min: float = 2.5
    session_expiry_min: float = 30.0
    guesses_per_day: int = 10
    attack_days: int = 365
    seed: int = 1
    data_dir: str = "./data"
    listen: str = "127.0.0.1:8000"

    @property
    def dwell_min_duration_s(self) -> int:
        return int(self.dwell_min * 60)

    @property
    def max_dwell_s(self) -> int:
        return int(self.max_dwell_h * 3600)

    @property
    def sample_interval_s(self) -> int:
        return int(self.sample_interval_min * 60)

    def pipeline_params(self):
        from .trace import PipelineParams

        return PipelineParams(
            dwell_radius_m=self.margin_m,
            dwell_min_duration_s=self.dwell_min_duration_s,
            uniqueness_radius_m=self.unique_m,
            max_dwell_s=self.max_dwell_s,
            sample_interval_s=self.sample_interval_s,
        )

    def dump(self) -> str:
        lines = [f"{f.name} = {getattr(self, f.name)}" for f in fields(self)]
        return "\n".join(lines) + "\n"


def _coerce(name: str, kind: type, raw: Any) -> Any:
    try:
        if kind is int:
            return int(str(raw))
        if kind is float:
            return float(str(raw))
        return str(raw)
    except ValueError as exc:
        raise ValueError(f"config key {name}: {exc}") from exc


def resolve_config(
    config_file: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
    flags: Mapping[str, Any] | None = None,
) -> CliConfig:
    """Merge the four layers into a CliConfig.

    `flags` holds only the options the user actually passed (None values
    are treated as absent). Unknown keys in the config file are rejected;
    unknown GEOCHALLENGE_* variables are ignored so unrelated tooling can
    share the prefix.
    """

    known = {f.name: f.type for f in fields(CliConfig)}
    kinds = {"int": int, "float": float, "str": str}
    values: dict[str, Any] = {}

    if config_file is not None:
        raw = parse_kv(Path(config_file).read_text())
        unknown = set(raw) - set(known)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        for key, val in raw.items():
            values[key] = _coerce(key, kinds[known[key]], val)

    environ = os.environ if environ is None else environ
    for key in known:
        env_val = environ.get(ENV_PREFIX + key.upper())
        if env_val is not None:
            values[key] = _coerce(key, kinds[known[key]], env_val)

    for key, val in (flags or {}).items():
        if val is None:
            continue
        if key not in known:
            raise ValueError(f"unknown flag {key}")
        values[key] = _coerce(key, kinds[known[key]], val)

    return CliConfig(**values)
