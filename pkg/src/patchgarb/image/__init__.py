from .io import decode_image, encode_png
from .patches import PatchGrid, extract_patches, patch_shuffle, reconstruct, shuffle_patches
from .sample import ImageSample
from .transforms import (AugmentParams, affine_augment, flip, resize_bilinear, sample_affine,
                         scale_variant)

__all__ = [
    "AugmentParams", "ImageSample", "PatchGrid", "affine_augment", "decode_image",
    "encode_png", "extract_patches", "flip", "patch_shuffle", "reconstruct",
    "resize_bilinear", "sample_affine", "scale_variant", "shuffle_patches",
]
