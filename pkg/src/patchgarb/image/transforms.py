"""Resize, flips and randomised affine augmentation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import InvalidImageError
from ..rng import SplitMix64
from .sample import ImageSample


def _resize_axis(src: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    n = src.shape[axis]
    pos = (np.arange(out_len, dtype=np.float64) + 0.5) * (n / out_len) - 0.5
    pos = np.clip(pos, 0.0, n - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, n - 1)
    frac = pos - i0
    shape = [1] * src.ndim
    shape[axis] = out_len
    frac = frac.reshape(shape)
    a = np.take(src, i0, axis=axis)
    b = np.take(src, i1, axis=axis)
    return a + (b - a) * frac


def resize_bilinear(img: ImageSample, out_h: int, out_w: int) -> ImageSample:
    """Separable bilinear resize with half-pixel centers (align_corners=False)."""
    if out_h < 1 or out_w < 1:
        raise InvalidImageError(f"invalid output size {out_h}x{out_w}")
    h, w, _ = img.shape
    if (h, w) == (out_h, out_w):
        return img
    out = _resize_axis(img.pixels.astype(np.float64), out_h, 0)
    out = _resize_axis(out, out_w, 1)
    return img.with_pixels(np.clip(out, 0.0, 1.0).astype(np.float32))


def flip(img: ImageSample, axis: str = "horizontal") -> ImageSample:
    if axis == "horizontal":
        px = img.pixels[:, ::-1, :]
    elif axis == "vertical":
        px = img.pixels[::-1, :, :]
    else:
        raise ValueError(f"unknown flip axis {axis!r}")
    return img.with_pixels(np.ascontiguousarray(px))


@dataclass(frozen=True)
class AugmentParams:
    """Sampling ranges for :func:`affine_augment`.

    Rotation is in degrees, shear in tangent units. ``scale`` multiplies
    the sampling grid, so factors above 1 zoom out.
    """

    rotation_deg: tuple[float, float] = (-30.0, 30.0)
    shear: tuple[float, float] = (-0.2, 0.2)
    hflip_prob: float = 0.5
    vflip_prob: float = 0.5
    scale: tuple[float, float] = (0.8, 1.25)

    def __post_init__(self):
        for name in ("rotation_deg", "shear", "scale"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range [{lo}, {hi}] is not ordered")
        if self.scale[0] <= 0:
            raise ValueError("scale range must be positive")
        for name in ("hflip_prob", "vflip_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def identity(cls) -> "AugmentParams":
        return cls((0.0, 0.0), (0.0, 0.0), 0.0, 0.0, (1.0, 1.0))


def sample_affine(params: AugmentParams, seed: int) -> np.ndarray:
    """Draw one transform and return its 2x2 output-to-source matrix.

    Draw order is fixed (rotation, shear, scale, hflip, vflip) and every
    draw is consumed even for degenerate ranges.
    """
    rng = SplitMix64(seed)
    theta = math.radians(rng.uniform(*params.rotation_deg))
    shear = rng.uniform(*params.shear)
    zoom = rng.uniform(*params.scale)
    hf = -1.0 if rng.random() < params.hflip_prob else 1.0
    vf = -1.0 if rng.random() < params.vflip_prob else 1.0
    cos, sin = math.cos(theta), math.sin(theta)
    rot = np.array([[cos, -sin], [sin, cos]])
    shr = np.array([[1.0, shear], [0.0, 1.0]])
    return rot @ shr @ np.diag([zoom * hf, zoom * vf])


def affine_augment(img: ImageSample, params: AugmentParams, seed: int) -> ImageSample:
    matrix = sample_affine(params, seed)
    if np.array_equal(matrix, np.eye(2)):
        return img
    out = kernels.affine_warp(img.pixels, matrix)
    return img.with_pixels(np.clip(out, 0.0, 1.0))


def scale_variant(img: ImageSample, factor: float, seed: int = 0) -> ImageSample:
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    params = AugmentParams((0.0, 0.0), (0.0, 0.0), 0.0, 0.0, (factor, factor))
    return affine_augment(img, params, seed)
