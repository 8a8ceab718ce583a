"""Evaluation variants, accuracy, and the train x test cross-evaluation matrix."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import DatasetIndex, load_resized
from ..errors import DataError, InvalidImageError
from ..image import ImageSample, encode_png, flip, patch_shuffle, scale_variant
from ..nn.checkpoint import checkpoint_load
from ..nn.model import INFERENCE, Model
from ..numeric import thread_limits
from ..rng import SplitMix64, derive_seed
from .config import TEST_VARIANTS, TRAIN_VARIANTS

log = logging.getLogger(__name__)

SCALED_RANGE = (0.8, 1.25)
MISSING = "NA"


@dataclass
class EvalSet:
    """A materialised evaluation variant: identical arrays for every model."""

    variant: str
    images: np.ndarray
    labels: np.ndarray
    source_ids: list[str]
    classes: list[str]

    def __len__(self):
        return len(self.labels)

    def save(self, out_dir) -> Path:
        """Write ``out_dir/<variant>/<class>/<stem>.png``."""
        root = Path(out_dir) / self.variant
        for px, label, sid in zip(self.images, self.labels, self.source_ids):
            stem = Path(sid).stem
            encode_png(ImageSample(px, int(label), sid), root / self.classes[label] / f"{stem}.png")
        return root


def variant_transform(sample: ImageSample, variant: str, variant_seed: int,
                      flip_axis: str = "horizontal") -> ImageSample:
    seed = derive_seed(variant_seed, variant, sample.source_id)
    if variant == "original":
        return sample
    if variant.startswith("shuffled_"):
        return patch_shuffle(sample, int(variant.split("_")[1]), seed)
    if variant == "flipped":
        return flip(sample, flip_axis)
    if variant == "scaled":
        factor = SplitMix64(seed).uniform(*SCALED_RANGE)
        return scale_variant(sample, factor, seed)
    raise ValueError(f"unknown test variant {variant!r}")


def build_eval_variant(val_index: DatasetIndex, variant: str, variant_seed: int = 0,
                       hw: int = 224, cache: dict | None = None,
                       flip_axis: str = "horizontal") -> EvalSet:
    if variant not in TEST_VARIANTS:
        raise ValueError(f"unknown test variant {variant!r}")
    images, labels, ids = [], [], []
    for i in range(len(val_index)):
        try:
            sample = load_resized(val_index, i, hw, cache)
        except InvalidImageError as exc:
            log.warning("skipping %s: %s", val_index.entries[i][0], exc)
            continue
        sample = variant_transform(sample, variant, variant_seed, flip_axis)
        images.append(sample.pixels)
        labels.append(sample.label)
        ids.append(sample.source_id)
    if not images:
        raise DataError(f"evaluation variant {variant!r} is empty")
    return EvalSet(variant, np.stack(images), np.asarray(labels, np.int64), ids,
                   list(val_index.classes))


@dataclass
class EvalResult:
    accuracy: float
    per_class: list[float]
    confusion: np.ndarray  # rows = true class, cols = predicted

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


def predict(model: Model, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    previous = model.mode
    model.set_mode(INFERENCE)
    try:
        with thread_limits():
            preds = [np.argmax(model.forward(images[i:i + batch_size]), axis=1)
                     for i in range(0, len(images), batch_size)]
    finally:
        model.set_mode(previous)
    return np.concatenate(preds)


def accuracy_from_predictions(preds, labels, num_classes: int) -> EvalResult:
    labels = np.asarray(labels, np.int64)
    preds = np.asarray(preds, np.int64)
    if labels.size == 0:
        raise DataError("cannot evaluate an empty set")
    confusion = np.zeros((num_classes, num_classes), np.int64)
    np.add.at(confusion, (labels, preds), 1)
    support = confusion.sum(axis=1)
    per_class = [float(confusion[k, k] / support[k]) if support[k] else float("nan")
                 for k in range(num_classes)]
    return EvalResult(float(np.trace(confusion) / labels.size), per_class, confusion)


def evaluate(model: Model, eval_set: EvalSet, batch_size: int = 64) -> EvalResult:
    """Top-1 accuracy, per-class accuracy and confusion matrix."""
    if len(eval_set) == 0:
        raise DataError("cannot evaluate an empty set")
    preds = predict(model, eval_set.images, batch_size)
    return accuracy_from_predictions(preds, eval_set.labels, model.arch.num_classes)


@dataclass
class EvalMatrix:
    rows: list[str]
    cols: list[str]
    cells: list[list[float | None]]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for row in self.cells:
            if len(row) != len(self.cols):
                raise ValueError("ragged evaluation matrix")
            for v in row:
                if v is not None and not 0.0 <= v <= 1.0:
                    raise ValueError(f"accuracy {v} outside [0, 1]")

    def cell(self, row: str, col: str):
        return self.cells[self.rows.index(row)][self.cols.index(col)]

    @property
    def gaps(self) -> list[str]:
        return [r for r, cells in zip(self.rows, self.cells) if any(v is None for v in cells)]

    def to_csv(self) -> str:
        lines = [",".join(["train_variant", *self.cols])]
        for name, cells in zip(self.rows, self.cells):
            lines.append(",".join([name, *(MISSING if v is None else f"{v:.4f}" for v in cells)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "EvalMatrix":
        header, *body = [line for line in text.splitlines() if line]
        cols = header.split(",")[1:]
        rows, cells = [], []
        for line in body:
            name, *vals = line.split(",")
            rows.append(name)
            cells.append([None if v == MISSING else float(v) for v in vals])
        return cls(rows, cols, cells)

    def format_table(self) -> str:
        width = max(len("train \\ test"), *(len(r) for r in self.rows))
        head = "train \\ test".ljust(width) + "".join(f"  {c:>11}" for c in self.cols)
        out = [head, "-" * len(head)]
        for name, cells in zip(self.rows, self.cells):
            out.append(name.ljust(width) + "".join(
                f"  {(MISSING if v is None else f'{v:.4f}'):>11}" for v in cells))
        return "\n".join(out)


# Reference values from the original study (Kaggle corpus, 200 epochs).
# Not reproducible at desk scale; kept for side-by-side comparison.
REFERENCE_MATRIX = EvalMatrix(
    rows=list(TRAIN_VARIANTS),
    cols=list(TEST_VARIANTS),
    cells=[
        [0.7600, 0.3560, 0.4280, 0.6160, 0.7320],
        [0.7840, 0.3160, 0.4280, 0.6600, 0.7680],
        [0.8240, 0.4530, 0.5520, 0.7360, 0.7480],
        [0.6600, 0.4280, 0.4560, 0.3160, 0.3000],
    ],
    metadata={"source": "reference"},
)


def cross_eval(checkpoints: dict[str, object], eval_sets: dict[str, EvalSet],
               batch_size: int = 64) -> EvalMatrix:
    """Evaluate each checkpoint (path or loaded Model) on every eval set.

    Missing checkpoints produce a row of gap markers instead of failing.
    """
    cols = list(eval_sets)
    rows, cells = [], []
    for name, ckpt in checkpoints.items():
        rows.append(name)
        if ckpt is None or (not isinstance(ckpt, Model) and not Path(ckpt).exists()):
            log.warning("no checkpoint for %s; row left as gaps", name)
            cells.append([None] * len(cols))
            continue
        model = ckpt if isinstance(ckpt, Model) else checkpoint_load(ckpt)
        cells.append([evaluate(model, eval_sets[c], batch_size).accuracy for c in cols])
    return EvalMatrix(rows, cols, cells)
