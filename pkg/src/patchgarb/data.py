"""Directory-per-class datasets: scanning, splitting, batching, synthesis."""
from __future__ import annotations

import colorsys
import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
from PIL import Image

from .errors import DataError, DegenerateClassError, InvalidImageError
from .image import ImageSample, decode_image, encode_png, resize_bilinear
from .rng import SplitMix64, derive_seed

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
Transform = Callable[[ImageSample, int], ImageSample]


@dataclass
class DatasetIndex:
    classes: list[str]
    entries: list[tuple[str, int]]
    root: Path = field(default_factory=Path)

    def __len__(self):
        return len(self.entries)

    def class_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in self.classes}
        for _, label in self.entries:
            counts[self.classes[label]] += 1
        return counts

    def subset(self, positions) -> "DatasetIndex":
        return DatasetIndex(self.classes, [self.entries[i] for i in positions], self.root)

    def to_text(self) -> str:
        """One ``relative_path<TAB>class_index`` line per entry."""
        return "".join(f"{path}\t{label}\n" for path, label in self.entries)

    @classmethod
    def from_text(cls, text: str, classes: list[str], root) -> "DatasetIndex":
        entries = []
        for line in text.splitlines():
            if line:
                path, label = line.rsplit("\t", 1)
                entries.append((path, int(label)))
        return cls(list(classes), entries, Path(root))

    def load(self, i: int) -> ImageSample:
        rel, label = self.entries[i]
        return decode_image(self.root / rel, label, source_id=rel)


def _is_decodable(path: Path) -> bool:
    try:
        with Image.open(path) as im:
            im.verify()
        return True
    except Exception:  # PIL raises a zoo of exception types here
        return False


def scan_dataset(root) -> DatasetIndex:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))
    if not classes:
        raise DataError(f"no class directories under {root}")
    entries = []
    for label, name in enumerate(classes):
        files = sorted(p for p in (root / name).iterdir()
                       if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
        kept = 0
        for path in files:
            if not _is_decodable(path):
                log.warning("skipping undecodable image %s", path)
                continue
            entries.append((path.relative_to(root).as_posix(), label))
            kept += 1
        if kept == 0:
            log.warning("class directory %s has no usable images", root / name)
        log.info("class %s: %d images", name, kept)
    return DatasetIndex(classes, entries, root)


@dataclass(frozen=True)
class SplitSpec:
    val_fraction: float = 0.1
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie strictly between 0 and 1")


def split(index: DatasetIndex, spec: SplitSpec) -> tuple[DatasetIndex, DatasetIndex]:
    """Seeded (optionally stratified) train/validation partition.

    Each group gets ``round(val_fraction * n)`` validation entries, clamped so
    both sides keep at least one. Output keeps the index's entry order.
    """
    if spec.stratified:
        groups = {}
        for pos, (_, label) in enumerate(index.entries):
            groups.setdefault(label, []).append(pos)
        keyed = [(index.classes[label], groups[label]) for label in sorted(groups)]
    else:
        keyed = [("*", list(range(len(index))))]
    val = set()
    for key, positions in keyed:
        n = len(positions)
        if n < 2:
            raise DegenerateClassError(f"group {key!r} has {n} entries; cannot split")
        n_val = min(max(math.floor(spec.val_fraction * n + 0.5), 1), n - 1)
        perm = SplitMix64(derive_seed(spec.seed, "split", key)).permutation(n)
        val.update(positions[i] for i in perm[:n_val])
    train_pos = [i for i in range(len(index)) if i not in val]
    val_pos = [i for i in range(len(index)) if i in val]
    return index.subset(train_pos), index.subset(val_pos)


def load_resized(index: DatasetIndex, i: int, hw: int, cache: dict | None = None) -> ImageSample:
    key = (index.entries[i][0], hw)
    if cache is not None and key in cache:
        return cache[key]
    sample = resize_bilinear(index.load(i), hw, hw)
    if cache is not None:
        cache[key] = sample
    return sample


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return SplitMix64(derive_seed(seed, "epoch", epoch)).permutation(n)


def batch_iter(index: DatasetIndex, batch_size: int, epoch: int, seed: int,
               transform: Transform | None = None, hw: int = 224,
               cache: dict | None = None, transform_seed: int | None = None,
               ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(images [N, hw, hw, C], labels [N])`` in a seeded per-epoch order.

    ``transform(sample, seed)`` receives a per-image seed derived from
    ``(transform_seed, source_id, epoch)``; ``transform_seed`` defaults to
    ``seed``. Images that fail to decode are skipped.
    """
    if transform_seed is None:
        transform_seed = seed
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    images, labels = [], []
    for i in epoch_order(len(index), seed, epoch):
        try:
            sample = load_resized(index, int(i), hw, cache)
        except InvalidImageError as exc:
            log.warning("skipping %s: %s", index.entries[i][0], exc)
            continue
        if transform is not None:
            sample = transform(sample, derive_seed(transform_seed, sample.source_id, epoch))
        images.append(sample.pixels)
        labels.append(sample.label)
        if len(images) == batch_size:
            yield np.stack(images), np.asarray(labels, np.int64)
            images, labels = [], []
    if images:
        yield np.stack(images), np.asarray(labels, np.int64)


def synth_dataset(out_dir, seed: int = 1, per_class: int = 20, hw: int = 32,
                  classes: int = 3) -> DatasetIndex:
    """Write a class-separable PNG corpus to ``out_dir/class_XX/img_XXX.png``.

    Each class has its own base hue; images add a per-image tint jitter and
    per-pixel uniform texture noise.
    """
    out_dir = Path(out_dir)
    for k in range(classes):
        base = np.array(colorsys.hsv_to_rgb(k / classes, 0.7, 0.8))
        for i in range(per_class):
            rng = SplitMix64(derive_seed(seed, "synth", k, i))
            tint = (rng.random_array(3) - 0.5) * 0.1
            noise = (rng.random_array(hw * hw * 3).reshape(hw, hw, 3) - 0.5) * 0.3
            px = np.clip(base + tint + noise, 0.0, 1.0).astype(np.float32)
            encode_png(ImageSample(px, k), out_dir / f"class_{k:02d}" / f"img_{i:03d}.png")
    return scan_dataset(out_dir)


def dataset_fingerprint(index: DatasetIndex) -> str:
    """SHA-256 over class names, entry list and file contents."""
    h = hashlib.sha256()
    h.update("\n".join(index.classes).encode("utf-8"))
    h.update(index.to_text().encode("utf-8"))
    for rel, _ in index.entries:
        path = index.root / rel
        h.update(path.read_bytes() if path.exists() else b"<missing>")
    return h.hexdigest()
