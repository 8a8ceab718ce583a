"""Experiment configuration and its ``key = value`` file format.

A config file is INI-style: ``[DEFAULT]`` holds shared settings and each
``[experiment.<name>]`` section defines one training run. Manifests use
the same format plus ``[run]``/``[eval]`` sections, so a manifest can be
fed back in to replay a whole cross-evaluation.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..nn.model import ArchConfig

TRAIN_VARIANTS = ("original", "augmented", "shuffled_4", "shuffled_32")
TEST_VARIANTS = ("original", "shuffled_4", "shuffled_32", "flipped", "scaled")


def _tuple(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    train_variant: str = "original"
    epochs: int = 200
    batch_size: int = 32
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    init_seed: int = 0
    data_seed: int = 0
    transform_seed: int = 0
    dataset_root: str = "data"
    out_dir: str = "runs"
    val_fraction: float = 0.1
    stratified: bool = True
    input_hw: int = 224
    conv_widths: tuple[int, ...] = (32, 32, 64, 64, 128, 128)
    dense_widths: tuple[int, ...] = (128, 32)
    cache_images: bool = True

    def __post_init__(self):
        if self.train_variant not in TRAIN_VARIANTS:
            raise ValueError(f"train_variant must be one of {TRAIN_VARIANTS}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def arch(self, num_classes: int) -> ArchConfig:
        return ArchConfig(num_classes=num_classes, input_hw=self.input_hw, channels=3,
                          conv_widths=tuple(self.conv_widths),
                          dense_widths=tuple(self.dense_widths),
                          post_pool_bn=min(2, len(self.conv_widths)))

    def to_section(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = ",".join(map(str, value)) if isinstance(value, tuple) else str(value)
        return out

    @classmethod
    def from_section(cls, section) -> "ExperimentConfig":
        kwargs = {}
        for f in fields(cls):
            if f.name not in section:
                continue
            raw = section[f.name]
            default = f.default
            if isinstance(default, bool):
                kwargs[f.name] = _bool(raw)
            elif isinstance(default, int):
                kwargs[f.name] = int(raw)
            elif isinstance(default, float):
                kwargs[f.name] = float(raw)
            elif isinstance(default, tuple):
                kwargs[f.name] = _tuple(raw)
            else:
                kwargs[f.name] = str(raw)
        return cls(**kwargs)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def load_config(path) -> list[ExperimentConfig]:
    """Parse every ``[experiment.*]`` section (or DEFAULT alone if there are none)."""
    parser = _parser()
    if not parser.read(Path(path), encoding="utf-8"):
        raise FileNotFoundError(path)
    allowed = {f.name for f in fields(ExperimentConfig)}
    sections = [s for s in parser.sections() if s.startswith("experiment.")]
    if not sections:
        unknown = set(parser.defaults()) - allowed
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return [ExperimentConfig.from_section(parser.defaults())]
    configs = []
    for name in sections:
        unknown = set(parser[name]) - allowed
        if unknown:
            raise ValueError(f"[{name}] unknown config keys: {sorted(unknown)}")
        configs.append(ExperimentConfig.from_section(parser[name]))
    return configs
