"""
config/training.py — Training configuration for the toy MORL loop.

Config files are either JSON or flat `key=value` lines. Mixture weights
use dotted keys in the flat form:

    group_size=8
    learning_rate=0.5
    mixture.visual_counting=1.0
"""

import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from core.errors import ConfigError
from core.types import TaskKind

logger = logging.getLogger("MORL.config")

OPTIMIZERS = ("on_policy", "vanilla")
NORMALIZATIONS = ("group", "batch")


@dataclass(frozen=True)
class TrainConfig:
    # ── GRPO ──────────────────────────────────────────────────────────────────
    group_size: int = 8
    learning_rate: float = 0.1
    batch_queries: int = 8
    easy_filter_threshold: float = 0.9
    advantage_epsilon: float = 1e-8
    seed: int = 0
    optimizer: str = "on_policy"
    normalization: str = "group"

    # ── Vanilla baseline only ─────────────────────────────────────────────────
    clip_epsilon: float = 0.2
    reuse_epochs: int = 4
    kl_coef: float = 1.5

    # ── Task stream ───────────────────────────────────────────────────────────
    steps: int = 100
    mixture: dict[TaskKind, float] = field(default_factory=lambda: {TaskKind.VISUAL_COUNTING: 1.0})
    tasks_per_kind: int = 16
    n_candidates: int = 4
    difficulty: float = 0.5
    curation_rollouts: int = 16

    # ── Bookkeeping ───────────────────────────────────────────────────────────
    eval_every: int = 10
    eval_samples: int = 64
    max_degenerate_steps: int = 100

    def validate(self) -> bool:
        """Collect every invalid field and raise one ConfigError listing them."""
        errors = []

        if self.group_size < 2:
            errors.append(f"group_size must be >= 2 (a group baseline needs two samples), got {self.group_size}")
        if self.learning_rate < 0:
            errors.append(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_queries < 1:
            errors.append("batch_queries must be >= 1")
        if not (0.0 < self.easy_filter_threshold <= 1.0):
            errors.append(f"easy_filter_threshold must be in (0,1], got {self.easy_filter_threshold}")
        if self.advantage_epsilon <= 0:
            errors.append("advantage_epsilon must be positive")
        if self.optimizer not in OPTIMIZERS:
            errors.append(f"optimizer must be one of {OPTIMIZERS}, got '{self.optimizer}'")
        if self.normalization not in NORMALIZATIONS:
            errors.append(f"normalization must be one of {NORMALIZATIONS}, got '{self.normalization}'")
        if self.clip_epsilon <= 0:
            errors.append(f"clip_epsilon must be > 0, got {self.clip_epsilon}")
        if self.reuse_epochs < 1:
            errors.append("reuse_epochs must be >= 1")
        if self.kl_coef < 0:
            errors.append("kl_coef must be >= 0")
        if self.steps < 0:
            errors.append("steps must be >= 0")
        if not self.mixture:
            errors.append("mixture must name at least one task kind")
        elif any(w < 0 for w in self.mixture.values()) or sum(self.mixture.values()) <= 0:
            errors.append("mixture weights must be >= 0 with a positive total")
        elif not any(k.is_verifiable and w > 0 for k, w in self.mixture.items()):
            errors.append("mixture needs at least one verifiable task kind with positive weight")
        if self.tasks_per_kind < 1:
            errors.append("tasks_per_kind must be >= 1")
        if self.n_candidates < 1:
            errors.append("n_candidates must be >= 1")
        if not (0.0 <= self.difficulty <= 1.0):
            errors.append("difficulty must be in [0,1]")
        if self.curation_rollouts < 0:
            errors.append("curation_rollouts must be >= 0")
        if self.eval_every < 0 or self.eval_samples < 1:
            errors.append("eval_every must be >= 0 and eval_samples >= 1")
        if self.max_degenerate_steps < 1:
            errors.append("max_degenerate_steps must be >= 1")

        if errors:
            raise ConfigError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))
        return True

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        updated = replace(self, **overrides)
        updated.validate()
        return updated

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["mixture"] = {str(k): w for k, w in self.mixture.items()}
        return out


_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _coerce(key: str, value: Any) -> Any:
    expected = _FIELD_TYPES[key]
    try:
        if expected is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if expected is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {value!r} as {expected.__name__}")


def _parse_mixture(raw: dict) -> dict[TaskKind, float]:
    mixture = {}
    for name, weight in raw.items():
        try:
            kind = TaskKind(name)
        except ValueError:
            raise ConfigError(f"mixture: unknown task kind '{name}'")
        try:
            mixture[kind] = float(weight)
        except (TypeError, ValueError):
            raise ConfigError(f"mixture.{name}: weight {weight!r} is not a number")
    return mixture


def _parse_flat(text: str) -> dict:
    raw: dict[str, Any] = {}
    mixture: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got '{line}'")
        key, value = key.strip(), value.strip()
        if key.startswith("mixture."):
            mixture[key[len("mixture."):]] = value
        else:
            raw[key] = value
    if mixture:
        raw["mixture"] = mixture
    return raw


def config_from_mapping(raw: dict) -> TrainConfig:
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key '{key}'")
        if key == "mixture":
            if not isinstance(value, dict):
                raise ConfigError("mixture must be a mapping of task kind to weight")
            kwargs[key] = _parse_mixture(value)
        else:
            kwargs[key] = _coerce(key, value)
    config = TrainConfig(**kwargs)
    config.validate()
    return config


def load_train_config(path: str | Path) -> TrainConfig:
    """Read a TrainConfig from a JSON or flat key=value file."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}")
    else:
        raw = _parse_flat(text)
    config = config_from_mapping(raw)
    logger.debug(f"Loaded training config from {path}: {config}")
    return config
