"""Non-overlapping patch extraction, shuffling and reassembly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidGridError, PatchSizeError
from ..rng import SplitMix64
from .sample import ImageSample


@dataclass(frozen=True)
class PatchGrid:
    """Patches of one image in row-major (i, j) order.

    ``patches`` has shape [rows * cols, P, P, C]. ``label`` and
    ``source_id`` ride along so reconstruction can rebuild the sample.
    """

    patches: np.ndarray
    rows: int
    cols: int
    patch_size: int
    label: int = 0
    source_id: str = ""

    def __len__(self):
        return self.patches.shape[0]


def extract_patches(img: ImageSample, patch_size: int) -> PatchGrid:
    h, w, c = img.shape
    p = int(patch_size)
    if p < 1 or h % p or w % p:
        raise PatchSizeError(f"patch size {p} does not divide image {h}x{w}")
    rows, cols = h // p, w // p
    patches = (img.pixels.reshape(rows, p, cols, p, c)
               .transpose(0, 2, 1, 3, 4)
               .reshape(rows * cols, p, p, c))
    return PatchGrid(np.ascontiguousarray(patches), rows, cols, p,
                     img.label, img.source_id)


def shuffle_patches(grid: PatchGrid, seed: int) -> PatchGrid:
    """Permute the patch order with a seeded Fisher-Yates shuffle."""
    perm = SplitMix64(seed).permutation(len(grid))
    return PatchGrid(grid.patches[perm], grid.rows, grid.cols, grid.patch_size,
                     grid.label, grid.source_id)


def reconstruct(grid: PatchGrid) -> ImageSample:
    """Place patch k at grid cell (k // cols, k % cols)."""
    patches = grid.patches
    p = grid.patch_size
    if (patches.ndim != 4 or patches.shape[0] != grid.rows * grid.cols
            or patches.shape[1:3] != (p, p)):
        raise InvalidGridError(
            f"patches {patches.shape} inconsistent with {grid.rows}x{grid.cols} grid of P={p}")
    c = patches.shape[3]
    pixels = (patches.reshape(grid.rows, grid.cols, p, p, c)
              .transpose(0, 2, 1, 3, 4)
              .reshape(grid.rows * p, grid.cols * p, c))
    return ImageSample(np.ascontiguousarray(pixels), grid.label, grid.source_id)


def patch_shuffle(img: ImageSample, patch_size: int, seed: int) -> ImageSample:
    return reconstruct(shuffle_patches(extract_patches(img, patch_size), seed))
