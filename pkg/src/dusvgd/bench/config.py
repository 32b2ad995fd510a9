"""Flat key-value experiment configuration.

One ``key = value`` per line, ``#`` starts a comment, section fields use dotted
keys (``train.lr = 1e-2``). Lists are comma separated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

TASKS = ("mixture", "logreg", "bnn")
VARIANTS = ("fixed", "rmsprop", "dusvgd", "cdusvgd")


@dataclass
class ModelConfig:
    n_particles: int = 100
    a: float = 1.0
    b: float = 0.01
    hidden: int = 50
    init: str = "prior"
    score_batch: int = 256


@dataclass
class ScheduleConfig:
    eps: float = 0.1
    eps0: float = 0.1
    rho: float = 0.9
    delta: float = 1e-8
    reverse: bool = True
    file: str = ""


@dataclass
class TrainConfig:
    T: int = 10
    epochs: int = 10
    batch: int = 50
    lr: float = 1e-2
    init_eps: float = 2.0
    init_alpha: float = 0.3
    init_beta: float = 1.0
    ref_size: int = 100
    loss_points: int = 0


@dataclass
class RunConfig:
    iters: int = 200
    interval: int = 1
    trials: int = 50
    seed: int = 0


@dataclass
class DataConfig:
    format: str = "synthetic"
    path: str = ""
    n_samples: int = 1000
    n_features: int = 0
    train_frac: float = 0.9
    subsample: int = 0
    standardize: bool = True
    bias: bool = False
    target_col: int = -1
    header: bool = False


@dataclass
class ExperimentConfig:
    task: str = "mixture"
    variant: str = "fixed"
    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    run: RunConfig = field(default_factory=RunConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not 0 < self.data.train_frac < 1:
            raise ConfigError("data.train_frac must lie in (0, 1)")
        if self.run.trials < 1:
            raise ConfigError("run.trials must be >= 1")
        if self.run.interval < 1 or self.run.iters < 0:
            raise ConfigError("run.interval must be >= 1 and run.iters >= 0")
        if self.model.n_particles < 1:
            raise ConfigError("model.n_particles must be >= 1")
        if not 0 <= self.run.seed < 2**64:
            raise ConfigError("run.seed must be a 64-bit unsigned integer")
        return self


SECTIONS = ("model", "schedule", "train", "run", "data")


def _coerce(raw: str, kind, key):
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if kind is int:
            value = float(raw) if any(c in raw for c in ".eE") else int(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None


def _field_types(obj):
    hints = {"int": int, "float": float, "bool": bool, "str": str}
    return {f.name: hints.get(f.type, str) for f in dataclasses.fields(obj)}


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section {section!r}")
            target = getattr(cfg, section)
        else:
            name, target = key, cfg
            if name not in ("task", "variant"):
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        types = _field_types(target)
        if name not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(target, name, _coerce(value, types[name], key))
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())


def format_config(cfg: ExperimentConfig) -> str:
    lines = [f"task = {cfg.task}", f"variant = {cfg.variant}"]
    for section in SECTIONS:
        block = getattr(cfg, section)
        for f in dataclasses.fields(block):
            value = getattr(block, f.name)
            if isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{section}.{f.name} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# flat key-value records (summaries, saved schedules)


def write_kv(path, items: dict):
    lines = []
    for key, value in items.items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = repr(value)
        elif isinstance(value, (list, tuple)):
            value = ",".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out
