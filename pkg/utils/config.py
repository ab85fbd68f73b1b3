# utils/config.py
"""
Scenario configuration loader.

Config files are dotenv-style `key = value` lines; `#` starts a comment. They
are read with python-dotenv's parser and never touch os.environ. Values are
coerced and range-checked by schemas.ScenarioConfig. Keys the file leaves out
fall back to the scenario's entry in SCENARIO_DEFAULTS, then to the model
defaults. `--override key=value` entries win over both.
"""
from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Dict, Iterable, Iterator, Optional, Tuple, Union

from dotenv.parser import parse_stream  # same parser load_dotenv / dotenv_values use
from pydantic import ValidationError

from core.exceptions import ConfigError
from schemas import ScenarioConfig

logger = logging.getLogger(__name__)

SCENARIO_DEFAULTS: Dict[str, Dict[str, object]] = {
    "lake_at_rest": {
        "bed": "bump", "J": 100, "x_left": 0.0, "x_right": 10.0, "lake_level": 1.0,
        "end_time": 1000.0, "max_steps": 1000, "boundary": "wall",
    },
    "dam_break": {
        "bed": "flat", "J": 400, "x_left": -1.0, "x_right": 1.0, "end_time": 0.1,
        "boundary": "outflow", "dam_position": 0.0, "dam_left_depth": 1.0, "dam_right_depth": 0.5,
    },
    "draining_slope": {
        "bed": "basin_slope", "bed_slope": 0.5, "J": 100, "x_left": 0.0, "x_right": 10.0,
        "lake_level": 0.5, "release_left": 7.0, "release_right": 8.0, "release_depth": 0.2,
        "end_time": 2.0, "boundary": "wall",
    },
    "particle_current": {
        "system": "particle", "bed": "flat", "J": 200, "x_left": 0.0, "x_right": 10.0,
        "dam_position": 2.0, "dam_left_depth": 1.0, "dam_right_depth": 0.1, "concentration": 1.0,
        "settling_velocity": 0.05, "g_particle": 1.0, "g_ambient": 0.05, "end_time": 2.0, "boundary": "wall",
    },
    "comparison_sweep": {},
    "convergence_study": {
        "system": "width", "bed": "bump", "x_left": 0.0, "x_right": 10.0, "lake_level": 1.0,
        "width_profile": "linear", "width_left": 1.0, "width_right": 0.5,
        "dam_position": 5.0, "end_time": 0.1,
    },
}

_NONE_WORDS = {"none", "null", ""}


def _entries(text: str, where: str) -> Iterator[Tuple[int, str, str]]:
    """Yield (line, key, raw value) for every assignment in dotenv-style text."""
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error or (binding.key is not None and binding.value is None):
            raise ConfigError(f"{where} {line}: expected 'key = value', got {binding.original.string.strip()!r}")
        if binding.key is None:
            continue
        yield line, binding.key, binding.value


def _coerce(value: str) -> Optional[str]:
    return None if value.strip().lower() in _NONE_WORDS else value.strip()


def apply_overrides(entries: Iterable[str]) -> Dict[str, Optional[str]]:
    """Turn ['key=value', ...] into a dict, rejecting malformed entries."""
    out: Dict[str, Optional[str]] = {}
    for entry in entries or ():
        parsed = list(_entries(entry, "override"))
        if not parsed:
            raise ConfigError(f"empty override: {entry!r}")
        for _, key, value in parsed:
            out[key] = _coerce(value)
    return out


def _check_keys(keys: Iterable[str]) -> None:
    known = ScenarioConfig.model_fields
    for key in keys:
        if key not in known:
            raise ConfigError(f"unknown key: {key}")


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        msg = err.get("msg", "invalid value")
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        loc = ".".join(str(p) for p in err.get("loc", ()))
        parts.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(parts)


def parse_config(text: str, overrides: Optional[Dict[str, Optional[str]]] = None) -> ScenarioConfig:
    """Parse config text, apply scenario defaults and overrides, validate."""
    values: Dict[str, Optional[str]] = {}
    for number, key, value in _entries(text, "line"):
        if key in values:
            raise ConfigError(f"line {number}: duplicate key: {key}")
        values[key] = _coerce(value)
    overrides = dict(overrides or {})
    _check_keys(values)
    _check_keys(overrides)

    scenario = overrides.get("scenario") or values.get("scenario")
    if not scenario:
        raise ConfigError("missing scenario")
    merged = {**SCENARIO_DEFAULTS.get(scenario, {}), **values, **overrides}
    merged = {k: v for k, v in merged.items() if v is not None}
    try:
        config = ScenarioConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(_validation_message(exc)) from exc
    logger.debug("[Config] resolved %s with %d explicit keys", config.scenario, len(values) + len(overrides))
    return config


def load_config(path: Union[str, Path], overrides: Optional[Iterable[str]] = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, apply_overrides(overrides or ()))
