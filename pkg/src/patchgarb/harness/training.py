"""Training runs for Experiments A (original), B (augmented) and C (shuffled)."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..data import DatasetIndex, SplitSpec, batch_iter, scan_dataset, split
from ..errors import NumericError
from ..image import AugmentParams, ImageSample, affine_augment, patch_shuffle
from ..nn.checkpoint import checkpoint_save
from ..nn.layers import softmax_cross_entropy
from ..nn.model import TRAIN, build_model
from ..nn.optim import OptimizerState, optimizer_step
from ..numeric import thread_limits
from ..rng import derive_seed
from .config import ExperimentConfig
from .evaluation import build_eval_variant, evaluate

log = logging.getLogger(__name__)

Audit = Callable[[ImageSample, ImageSample], None]


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float
    steps: int


@dataclass
class TrainReport:
    variant: str
    epochs: list[EpochMetrics] = field(default_factory=list)
    steps: int = 0
    wall_time: float = 0.0
    best_val_accuracy: float = -1.0
    best_epoch: int = -1
    best_checkpoint: Path | None = None
    final_checkpoint: Path | None = None
    aborted: str | None = None

    def metrics_csv(self) -> str:
        lines = ["epoch,train_loss,train_accuracy,val_accuracy,steps"]
        for m in self.epochs:
            lines.append(f"{m.epoch},{m.train_loss:.6f},{m.train_accuracy:.4f},"
                         f"{m.val_accuracy:.4f},{m.steps}")
        return "\n".join(lines) + "\n"


class TrainingAborted(NumericError):
    def __init__(self, message: str, report: TrainReport):
        super().__init__(message)
        self.report = report


def variant_train_transform(variant: str, params: AugmentParams | None = None):
    """Per-batch transform for a training variant (``None`` for original)."""
    if variant == "original":
        return None
    if variant == "augmented":
        params = params or AugmentParams()
        return lambda sample, seed: affine_augment(sample, params, seed)
    if variant.startswith("shuffled_"):
        size = int(variant.split("_")[1])
        return lambda sample, seed: patch_shuffle(sample, size, seed)
    raise ValueError(f"unknown training variant {variant!r}")


def _audited(transform, audit: Audit):
    def wrapped(sample, seed):
        out = transform(sample, seed) if transform else sample
        audit(sample, out)
        return out
    return wrapped


def prepare_split(config: ExperimentConfig) -> tuple[DatasetIndex, DatasetIndex]:
    index = scan_dataset(config.dataset_root)
    return split(index, SplitSpec(config.val_fraction, config.data_seed, config.stratified))


def run_experiment(config: ExperimentConfig, train_index: DatasetIndex | None = None,
                   val_index: DatasetIndex | None = None, audit: Audit | None = None,
                   cache: dict | None = None) -> TrainReport:
    """Train one model on the configured variant and checkpoint it.

    Writes ``best.pgck`` (highest validation accuracy, earliest epoch on
    ties) and ``final.pgck`` under ``out_dir/<variant>/``.
    """
    if train_index is None or val_index is None:
        train_index, val_index = prepare_split(config)
    if cache is None and config.cache_images:
        cache = {}
    run_dir = Path(config.out_dir) / config.train_variant
    run_dir.mkdir(parents=True, exist_ok=True)

    # Each variant gets its own init stream so runs are independently initialised.
    model = build_model(config.arch(len(train_index.classes)),
                        seed=derive_seed(config.init_seed, config.train_variant))
    state = OptimizerState(config.optimizer, config.learning_rate)
    transform = variant_train_transform(config.train_variant)
    if audit is not None:
        transform = _audited(transform, audit)
    val_set = build_eval_variant(val_index, "original", 0, config.input_hw, cache)
    report = TrainReport(config.train_variant)
    start = time.perf_counter()

    with thread_limits():
        for epoch in range(config.epochs):
            model.set_mode(TRAIN)
            loss_sum, correct, seen, steps = 0.0, 0, 0, 0
            for x, y in batch_iter(train_index, config.batch_size, epoch, config.data_seed,
                                   transform, config.input_hw, cache,
                                   transform_seed=config.transform_seed):
                logits = model.forward(x)
                loss, dlogits = softmax_cross_entropy(logits, y)
                if not np.isfinite(loss):
                    report.aborted = f"non-finite loss at epoch {epoch}, step {report.steps}"
                    report.wall_time = time.perf_counter() - start
                    (run_dir / "metrics.csv").write_text(report.metrics_csv())
                    raise TrainingAborted(report.aborted, report)
                optimizer_step(model, model.backward(dlogits), state)
                loss_sum += float(loss) * len(y)
                correct += int(np.sum(np.argmax(logits, axis=1) == y))
                seen += len(y)
                steps += 1
            report.steps += steps
            val_acc = evaluate(model, val_set).accuracy
            metrics = EpochMetrics(epoch, loss_sum / max(seen, 1), correct / max(seen, 1),
                                   val_acc, steps)
            report.epochs.append(metrics)
            log.info("%s epoch %d: loss %.4f train %.4f val %.4f", config.train_variant, epoch,
                     metrics.train_loss, metrics.train_accuracy, val_acc)
            if val_acc > report.best_val_accuracy:
                report.best_val_accuracy, report.best_epoch = val_acc, epoch
                report.best_checkpoint = checkpoint_save(model, run_dir / "best.pgck")

    report.final_checkpoint = checkpoint_save(model, run_dir / "final.pgck")
    report.wall_time = time.perf_counter() - start
    return report
