"""Training configuration and the plain key/value config format.

Config files hold one ``key = value`` pair per line; ``#`` starts a comment and
nested fields use dotted keys (``loss.kind = fl``). Values are parsed as JSON
when possible and otherwise taken as bare strings, then coerced to the field's
declared type.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .losses import LossConfig
from .preprocess import PreprocessConfig


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters. Defaults reproduce the published recipe.

    ``dim``, ``dropout`` and ``generator_learning_rate`` size the desk-scale
    reference model; ``preprocess`` defaults to the profile of ``language``.
    """

    learning_rate: float = 1e-5
    epochs: int = 10
    batch_size: int = 16
    validation_ratio: float = 0.2
    seed: int = 42
    max_len: int = 128
    loss: LossConfig = field(default_factory=LossConfig)
    use_rephrase: bool = False
    model_kind: str = "m1"
    encoder: str = "tiny"
    task: str = "A"
    language: str = "en"
    dim: int = 32
    dropout: float = 0.1
    generator_learning_rate: Optional[float] = None
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    preprocess: Optional[PreprocessConfig] = None

    def __post_init__(self):
        if self.learning_rate < 0 or self.epochs < 1 or self.batch_size < 1 or self.max_len < 2:
            raise ValueError("learning_rate, epochs, batch_size and max_len must be positive")
        if not 0 < self.validation_ratio < 1:
            raise ValueError("validation_ratio must lie in (0, 1)")
        if self.model_kind not in ("m1", "m2", "m3"):
            raise ValueError(f"model_kind must be m1, m2 or m3, got {self.model_kind!r}")
        if self.task not in ("A", "B"):
            raise ValueError(f"models are trained for task A or B, got {self.task!r}")
        if self.language not in ("ar", "en"):
            raise ValueError(f"language must be ar or en, got {self.language!r}")

    @property
    def preprocessing(self) -> PreprocessConfig:
        return self.preprocess or PreprocessConfig.for_language(self.language)

    @property
    def g_learning_rate(self) -> float:
        if self.generator_learning_rate is None:
            return self.learning_rate
        return self.generator_learning_rate

    def to_flat(self) -> dict[str, Any]:
        return flatten(self)


@dataclass(frozen=True)
class ExperimentConfig:
    """A training run: hyperparameters plus where the data lives and results go."""

    train: TrainConfig = field(default_factory=TrainConfig)
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    format: Optional[str] = None
    out: str = "runs/default"


def flatten(obj, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        key = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(value):
            out.update(flatten(value, key + "."))
        elif isinstance(value, tuple):
            out[key] = list(value)
        else:
            out[key] = value
    return out


def _parse_value(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    return text


def _coerce(value: Any, tp: Any, key: str) -> Any:
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key)
    if tp is bool:
        if isinstance(value, bool):
            return value
        if value in (0, 1):
            return bool(value)
        raise ValueError(f"{key}: expected a boolean, got {value!r}")
    if tp is int:
        if isinstance(value, bool) or not float(value).is_integer():
            raise ValueError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if tp is float:
        return float(value)
    if tp is str:
        return str(value)
    if origin is tuple:
        return tuple(_coerce(v, a, key) for v, a in zip(value, args))
    return value


def _build(cls, values: Mapping[str, Any], base=None, prefix: str = ""):
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    nested: dict[str, dict[str, Any]] = {}
    direct: dict[str, Any] = {}
    for key, value in values.items():
        head, _, rest = key.partition(".")
        if head not in known:
            raise KeyError(f"unknown config key {prefix + key!r}")
        if rest:
            nested.setdefault(head, {})[rest] = value
        else:
            direct[head] = value
    kwargs: dict[str, Any] = {}
    for name, value in direct.items():
        tp = hints[name]
        sub = _dataclass_type(tp)
        if sub is not None and isinstance(value, Mapping):
            nested.setdefault(name, {}).update(value)
            continue
        kwargs[name] = _coerce(value, tp, prefix + name)
    for name, sub_values in nested.items():
        sub = _dataclass_type(hints[name])
        if sub is None:
            raise KeyError(f"config key {prefix + name!r} has no sub-fields")
        current = getattr(base, name, None) if base is not None else None
        if current is None and sub is PreprocessConfig:
            lang = kwargs.get("language", getattr(base, "language", "en"))
            current = PreprocessConfig.for_language(lang)
        kwargs[name] = _build(sub, sub_values, current, prefix + name + ".")
    if base is None:
        return cls(**kwargs)
    return dataclasses.replace(base, **kwargs)


def _dataclass_type(tp):
    if dataclasses.is_dataclass(tp):
        return tp
    for arg in typing.get_args(tp):
        if dataclasses.is_dataclass(arg):
            return arg
    return None


def apply_overrides(config, overrides: Mapping[str, Any]):
    """Return a copy of a config dataclass with dotted-key overrides applied.

    String values are parsed first, so ``{"loss.gamma": "1.5"}`` works as well
    as ``{"loss.gamma": 1.5}``.
    """
    parsed = {k: _parse_value(v) if isinstance(v, str) else v for k, v in overrides.items()}
    return _build(type(config), parsed, config)


def parse_assignments(items: list[str]) -> dict[str, str]:
    """Parse ``key=value`` strings as given to ``--set``."""
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def read_kv(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def format_kv(values: Mapping[str, Any]) -> str:
    lines = []
    for key in values:
        value = values[key]
        if isinstance(value, str) and value == value.strip() and value and _parse_value(value) == value:
            lines.append(f"{key} = {value}")
        else:
            lines.append(f"{key} = {json.dumps(value, ensure_ascii=False)}")
    return "\n".join(lines) + "\n"


def write_kv(values: Mapping[str, Any], path: str | Path) -> None:
    Path(path).write_text(format_kv(values), encoding="utf-8")


def load_experiment(path: str | Path, overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read an experiment file; TrainConfig keys may appear bare or under ``train.``."""
    raw = read_kv(path)
    if overrides:
        raw.update(overrides)
    top = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"train"}
    values: dict[str, Any] = {}
    for key, value in raw.items():
        head = key.split(".", 1)[0]
        values[key if head in top or head == "train" else f"train.{key}"] = _parse_value(value)
    return _build(ExperimentConfig, values, ExperimentConfig())


def train_config_from_flat(values: Mapping[str, Any]) -> TrainConfig:
    return _build(TrainConfig, values, TrainConfig())
