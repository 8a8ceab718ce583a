"""PNG/JPEG decode and lossless PNG encode."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import InvalidImageError
from .sample import ImageSample

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def decode_image(path, label: int = 0, source_id: str | None = None) -> ImageSample:
    """Decode to 8-bit RGB, then scale to float32 in [0, 1]."""
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise InvalidImageError(f"cannot decode {path}: {exc}") from exc
    if rgb.shape[0] == 0 or rgb.shape[1] == 0:
        raise InvalidImageError(f"empty image {path}")
    return ImageSample(rgb.astype(np.float32) / np.float32(255.0), label,
                       str(path) if source_id is None else source_id)


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)


def encode_png(img: ImageSample, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    px = to_uint8(img.pixels)
    if px.shape[2] == 1:
        px = px[:, :, 0]
    Image.fromarray(px).save(path, format="PNG")
    return path
