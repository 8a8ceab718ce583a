"""Patch-shuffle and augmentation experiments for garbage image classification.

A numpy CNN (with a compiled kernel core), the image transforms that build
the training and evaluation variants, and a harness producing the
train-variant x test-variant accuracy matrix.
"""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
