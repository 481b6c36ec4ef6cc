"""Flat ``section.key=value`` configuration over the world, motion, policy and eval defaults.

Precedence is built-in defaults < config file < explicit overrides.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .motion import MotionParams
from .policy import TrainConfig
from .world import WorldConfig

SEED_ENV = "MOVE_BENCH_SEED"


class ConfigFileError(ValueError):
    pass


@dataclass(frozen=True)
class EvalSettings:
    grid: int = 13
    episodes: int = 3


@dataclass(frozen=True)
class Settings:
    world: WorldConfig = field(default_factory=WorldConfig)
    motion: MotionParams = field(default_factory=MotionParams)
    policy: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalSettings = field(default_factory=EvalSettings)

    def flat(self) -> dict[str, Any]:
        out = {}
        for section in ("world", "motion", "policy", "eval"):
            obj = getattr(self, section)
            for f in fields(obj):
                value = getattr(obj, f.name)
                if dataclasses.is_dataclass(value):
                    for g in fields(value):
                        out[f"{section}.{f.name}.{g.name}"] = getattr(value, g.name)
                else:
                    out[f"{section}.{f.name}"] = value
        return out

    def banner(self) -> str:
        return "\n".join(f"  {k} = {_render(v)}" for k, v in sorted(self.flat().items()))


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigFileError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _render(v: Any) -> str:
    if isinstance(v, tuple):
        return ",".join(_render(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(raw: str, like: Any, key: str) -> Any:
    try:
        if isinstance(like, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        if isinstance(like, tuple):
            parts = [p for p in raw.replace(" ", "").split(",") if p]
            elem = like[0] if like else 0.0
            return tuple(_coerce(p, elem, key) for p in parts)
    except ValueError:
        raise ConfigFileError(f"{key}: cannot parse {raw!r} as {type(like).__name__}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config_file(path: str | os.PathLike) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), str(p))


def resolve(overrides: Mapping[str, Any] = (), base: Settings | None = None) -> Settings:
    """Apply ``overrides`` (strings or typed values) on top of ``base``."""
    settings = base or Settings()
    known = settings.flat()
    overrides = dict(overrides)
    unknown = sorted(set(overrides) - set(known))
    if unknown:
        raise ConfigFileError(f"unknown config key(s): {', '.join(unknown)}")
    grouped: dict[str, dict] = {}
    for key, raw in overrides.items():
        value = _coerce(raw, known[key], key) if isinstance(raw, str) else raw
        section, rest = key.split(".", 1)
        grouped.setdefault(section, {})[rest] = value
    updates = {}
    for section, values in grouped.items():
        obj = getattr(settings, section)
        direct = {k: v for k, v in values.items() if "." not in k}
        nested: dict[str, dict] = {}
        for k, v in values.items():
            if "." in k:
                outer, inner = k.split(".", 1)
                nested.setdefault(outer, {})[inner] = v
        for outer, inner_vals in nested.items():
            direct[outer] = replace(getattr(obj, outer), **inner_vals)
        updates[section] = replace(obj, **direct)
    return replace(settings, **updates)
