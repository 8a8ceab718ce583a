"""Published layer table for the 224x224, 6-class network: the parameter-count oracle."""
from __future__ import annotations

from .model import Model

# (layer name, output shape without batch axis, parameter count)
TABLE1_ROWS = [
    ("conv2d", (224, 224, 32), 896),
    ("batch_normalization", (224, 224, 32), 128),
    ("max_pooling2d", (112, 112, 32), 0),
    ("batch_normalization_1", (112, 112, 32), 128),
    ("conv2d_1", (112, 112, 32), 9248),
    ("batch_normalization_2", (112, 112, 32), 128),
    ("max_pooling2d_1", (56, 56, 32), 0),
    ("batch_normalization_3", (56, 56, 32), 128),
    ("conv2d_2", (56, 56, 64), 18496),
    ("batch_normalization_4", (56, 56, 64), 256),
    ("max_pooling2d_2", (28, 28, 64), 0),
    ("conv2d_3", (28, 28, 64), 36928),
    ("batch_normalization_5", (28, 28, 64), 256),
    ("max_pooling2d_3", (14, 14, 64), 0),
    ("conv2d_4", (14, 14, 128), 73856),
    ("batch_normalization_6", (14, 14, 128), 512),
    ("max_pooling2d_4", (7, 7, 128), 0),
    ("conv2d_5", (7, 7, 128), 147584),
    ("batch_normalization_7", (7, 7, 128), 512),
    ("max_pooling2d_5", (3, 3, 128), 0),
    ("flatten", (1152,), 0),
    ("dense", (128,), 147584),
    ("dense_1", (32,), 4128),
    ("dense_2", (6,), 198),
]
TABLE1_TOTAL = 440966
TABLE1_TRAINABLE = 439942
TABLE1_NON_TRAINABLE = 1024


def compare_to_table1(model: Model) -> list[str]:
    """Return human-readable mismatches (empty when the model matches exactly)."""
    problems = []
    rows = model.summary()
    if len(rows) != len(TABLE1_ROWS):
        problems.append(f"{len(rows)} layers, expected {len(TABLE1_ROWS)}")
    for row, (name, shape, params) in zip(rows, TABLE1_ROWS):
        if row.name != name:
            problems.append(f"layer {row.name}: expected {name} at this position")
        if row.output_shape[1:] != shape:
            problems.append(f"layer {row.name}: output shape {row.output_shape[1:]} != {shape}")
        if row.params != params:
            problems.append(f"layer {row.name}: {row.params} params != {params}")
    total, trainable, non_trainable = model.param_counts()
    for label, got, want in (("total", total, TABLE1_TOTAL),
                             ("trainable", trainable, TABLE1_TRAINABLE),
                             ("non-trainable", non_trainable, TABLE1_NON_TRAINABLE)):
        if got != want:
            problems.append(f"{label} params {got:,} != {want:,}")
    return problems
