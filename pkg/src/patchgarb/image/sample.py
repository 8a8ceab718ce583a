from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidImageError


@dataclass(frozen=True)
class ImageSample:
    """An [H, W, C] float32 image in [0, 1] with its class label."""

    pixels: np.ndarray
    label: int
    source_id: str = field(default="")

    def __post_init__(self):
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 3:
            raise InvalidImageError("pixels must be an [H, W, C] array")
        if min(px.shape) < 1:
            raise InvalidImageError(f"degenerate image shape {px.shape}")
        if px.dtype != np.float32:
            object.__setattr__(self, "pixels", px.astype(np.float32))

    @property
    def shape(self):
        return self.pixels.shape

    def with_pixels(self, pixels: np.ndarray) -> "ImageSample":
        return replace(self, pixels=pixels)
