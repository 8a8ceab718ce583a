import numpy as np
import pytest

from conftest import random_image
from patchgarb.errors import InvalidGridError, PatchSizeError
from patchgarb.image import (ImageSample, PatchGrid, extract_patches, patch_shuffle,
                             reconstruct, shuffle_patches)


def pixel_multiset(px):
    flat = px.reshape(-1, px.shape[-1])
    return flat[np.lexsort(flat.T[::-1])]


def patch_multiset(patches):
    return sorted(p.tobytes() for p in patches)


@pytest.mark.parametrize("p, n", [(4, 3136), (32, 49)])
def test_patch_counts(p, n):
    grid = extract_patches(random_image(0, 224, 224), p)
    assert len(grid) == n and grid.rows * grid.cols == n
    assert grid.patches.shape[1:] == (p, p, 3)


def test_patch_content_location():
    img = random_image(1, 8, 12)
    grid = extract_patches(img, 4)
    i, j = 1, 2
    np.testing.assert_array_equal(grid.patches[i * grid.cols + j],
                                  img.pixels[4 * i:4 * i + 4, 4 * j:4 * j + 4])


def test_single_patch_is_image():
    img = random_image(2, 16, 16)
    grid = extract_patches(img, 16)
    assert len(grid) == 1
    np.testing.assert_array_equal(grid.patches[0], img.pixels)


@pytest.mark.parametrize("p", [3, 5, 0])
def test_non_divisor(p):
    with pytest.raises(PatchSizeError):
        extract_patches(random_image(0, 16, 16), p)


def test_single_patch_shuffle_unchanged():
    grid = extract_patches(random_image(3, 8, 8), 8)
    np.testing.assert_array_equal(shuffle_patches(grid, 99).patches, grid.patches)


def test_shuffle_determinism():
    grid = extract_patches(random_image(4, 32, 32), 4)
    a = shuffle_patches(grid, 5).patches
    b = shuffle_patches(grid, 5).patches
    assert a.tobytes() == b.tobytes()


def test_shuffle_multiset_3136():
    grid = extract_patches(random_image(5, 224, 224), 4)
    out = shuffle_patches(grid, 7)
    assert patch_multiset(out.patches) == patch_multiset(grid.patches)
    assert (out.rows, out.cols, out.patch_size) == (grid.rows, grid.cols, grid.patch_size)


@pytest.mark.parametrize("p", [1, 2, 4, 8, 16])
def test_round_trip(p):
    img = random_image(6, 16, 32)
    out = reconstruct(extract_patches(img, p))
    assert out.pixels.tobytes() == img.pixels.tobytes()


def test_constant_patches():
    grid = PatchGrid(np.full((4, 2, 2, 3), 0.3, np.float32), 2, 2, 2)
    out = reconstruct(shuffle_patches(grid, 1))
    assert np.all(out.pixels == np.float32(0.3)) and out.shape == (4, 4, 3)


def test_shuffle_preserves_pixel_histogram():
    img = random_image(7, 32, 32, label=2, source_id="x")
    out = patch_shuffle(img, 4, 11)
    np.testing.assert_array_equal(pixel_multiset(out.pixels), pixel_multiset(img.pixels))
    assert out.label == 2 and out.source_id == "x"


def test_different_seeds_differ_same_multiset():
    img = random_image(8, 32, 32)
    a, b = patch_shuffle(img, 4, 1), patch_shuffle(img, 4, 2)
    assert not np.array_equal(a.pixels, b.pixels)
    np.testing.assert_array_equal(pixel_multiset(a.pixels), pixel_multiset(b.pixels))


def test_full_size_patch_identity():
    img = random_image(9, 224, 224)
    assert patch_shuffle(img, 224, 3).pixels.tobytes() == img.pixels.tobytes()


def test_inconsistent_grid():
    with pytest.raises(InvalidGridError):
        reconstruct(PatchGrid(np.zeros((3, 2, 2, 3), np.float32), 2, 2, 2))
    with pytest.raises(InvalidGridError):
        reconstruct(PatchGrid(np.zeros((4, 2, 3, 3), np.float32), 2, 2, 2))


def test_input_not_mutated():
    img = random_image(10, 16, 16)
    before = img.pixels.copy()
    patch_shuffle(img, 4, 1)
    np.testing.assert_array_equal(img.pixels, before)


def test_single_channel():
    img = ImageSample(np.random.default_rng(0).random((8, 8, 1)), 0)
    out = patch_shuffle(img, 2, 3)
    assert out.shape == (8, 8, 1)
