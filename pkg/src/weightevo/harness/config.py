"""Run configuration: YAML schema, validation, CLI overrides.

A run is fully described by one nested mapping; the loaded config is copied
verbatim into the output directory so every run is reconstructible. Unknown
keys are rejected rather than ignored.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..evolve import CrossoverConfig, CrossoverLevel, MatchStrategy
from ..schedule import RateSchedule
from ..selection import SelectionConfig, SelectionMode
from ..engine import EngineConfig

OUTPUT_ROOT_ENV = "WEIGHTEVO_OUTPUT_ROOT"


@dataclass
class OptimizerConfig:
    batch_size: int = 128
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    milestones: list[int] = field(default_factory=lambda: [60, 120])
    epochs: int = 200

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError("optimizer.epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("optimizer.batch_size must be >= 1")
        ms = list(self.milestones)
        if ms != sorted(ms) or len(set(ms)) != len(ms):
            raise ConfigError("optimizer.milestones must be sorted and distinct")
        if ms and (ms[0] < 1 or ms[-1] >= self.epochs):
            raise ConfigError("optimizer.milestones must satisfy 1 <= m < epochs")


@dataclass
class DataConfig:
    train_samples: int = 1024
    eval_samples: int = 512
    root: str | None = None
    workers: int = 0


@dataclass
class WEConfig:
    enabled: bool = True
    mode: str = "full"  # full | global-only | local-only
    matching: str = "forward"  # forward | reverse
    alpha: str | float = "adaptive"  # "adaptive" or fixed value in [0, 1]
    level: str = "element"  # element | filter
    rate: float = 0.05
    gamma: float = 0.05
    decay: float = 2.5
    ramp: float = 15.0
    update_interval: int = 1
    without_bn: bool = False
    without_conv: bool = False
    include_classifier: bool = False

    def validate(self) -> None:
        try:
            SelectionMode(self.mode)
        except ValueError:
            raise ConfigError(f"we.mode must be one of full/global-only/local-only, got {self.mode!r}")
        try:
            MatchStrategy(self.matching)
        except ValueError:
            raise ConfigError(f"we.matching must be forward or reverse, got {self.matching!r}")
        try:
            CrossoverLevel(self.level)
        except ValueError:
            raise ConfigError(f"we.level must be element or filter, got {self.level!r}")
        if self.alpha != "adaptive":
            try:
                a = float(self.alpha)
            except (TypeError, ValueError):
                raise ConfigError(f"we.alpha must be 'adaptive' or a number, got {self.alpha!r}")
            if not 0.0 <= a <= 1.0:
                raise ConfigError("we.alpha must lie in [0, 1]")
        if not 0.0 < self.rate <= 1.0:
            raise ConfigError("we.rate must lie in (0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("we.gamma must lie in (0, 1)")
        if self.update_interval < 1:
            raise ConfigError("we.update_interval must be >= 1")

    def engine_config(self, epochs: int, milestones: list[int]) -> EngineConfig:
        schedule = RateSchedule(
            total_epochs=epochs,
            milestones=tuple(milestones),
            peak_rate=self.rate,
            decay=self.decay,
            ramp=self.ramp,
        )
        alpha = None if self.alpha == "adaptive" else float(self.alpha)
        return EngineConfig(
            selection=SelectionConfig(
                schedule=schedule, gamma=self.gamma, mode=SelectionMode(self.mode)
            ),
            crossover=CrossoverConfig(alpha=alpha, level=CrossoverLevel(self.level)),
            matching=MatchStrategy(self.matching),
            update_interval=self.update_interval,
            without_bn=self.without_bn,
            without_conv=self.without_conv,
        )


@dataclass
class RunConfig:
    model: str = "toy-cnn"
    dataset: str = "synthetic-2class"
    seed: int = 1
    repeats: int = 1
    output_dir: str = "runs/default"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    data: DataConfig = field(default_factory=DataConfig)
    we: WEConfig = field(default_factory=WEConfig)

    def validate(self) -> None:
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        self.optimizer.validate()
        self.we.validate()

    def to_dict(self) -> dict:
        return asdict(self)

    def resolved_output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        path = Path(self.output_dir)
        if root and not path.is_absolute():
            path = Path(root) / path
        return path


_SECTIONS = {"optimizer": OptimizerConfig, "data": DataConfig, "we": WEConfig}


def _build_section(cls, mapping: dict, prefix: str):
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"unknown {prefix} keys: {sorted(unknown)}")
    return cls(**mapping)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = dict(raw)
    sections = {}
    for name, cls in _SECTIONS.items():
        block = raw.pop(name, {}) or {}
        if not isinstance(block, dict):
            raise ConfigError(f"{name} block must be a mapping")
        sections[name] = _build_section(cls, block, f"{name}.")
    known = {f for f in RunConfig.__dataclass_fields__} - set(_SECTIONS)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**raw, **sections)
    cfg.validate()
    return cfg


def load_config(path: str | Path, overrides: dict[str, object] | None = None) -> RunConfig:
    """Load a YAML run config, apply dotted-path overrides, validate."""
    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        raw = {}
    if overrides:
        raw = apply_overrides(raw, overrides)
    return config_from_dict(raw)


def apply_overrides(raw: dict, overrides: dict[str, object]) -> dict:
    """Set dotted keys like ``we.alpha`` or ``optimizer.epochs`` in a nested dict."""
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"cannot override {dotted}: {p} is not a mapping")
            node = nxt
        node[parts[-1]] = value
    return out


def coerce_override(value: str) -> object:
    """Parse a CLI override string with YAML scalar rules (numbers, bools, null)."""
    return yaml.safe_load(value)


def save_config_copy(cfg: RunConfig, directory: Path) -> Path:
    path = directory / "config.yaml"
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path
