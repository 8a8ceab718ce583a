import numpy as np
import pytest

from conftest import random_image
from patchgarb.errors import InvalidImageError
from patchgarb.image import decode_image, encode_png
from patchgarb.image.io import to_uint8


def test_png_round_trip(tmp_path):
    img = random_image(0, 12, 10, label=1)
    q = img.with_pixels(to_uint8(img.pixels).astype(np.float32) / 255)
    path = encode_png(q, tmp_path / "a" / "b.png")
    back = decode_image(path, label=1)
    np.testing.assert_array_equal(back.pixels, q.pixels)
    assert back.label == 1 and back.source_id == str(path)


def test_decode_range(tmp_path):
    path = encode_png(random_image(1, 5, 5), tmp_path / "x.png")
    px = decode_image(path).pixels
    assert px.dtype == np.float32 and px.min() >= 0 and px.max() <= 1


def test_garbage_file(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(InvalidImageError):
        decode_image(bad)


def test_to_uint8_rounds():
    assert to_uint8(np.array([0.0, 0.5, 1.0, 1.2, -0.1])).tolist() == [0, 128, 255, 255, 0]
