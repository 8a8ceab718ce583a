import numpy as np

from patchgarb.harness import ExperimentConfig
from patchgarb.nn import ArchConfig, build_model


def toy_config(root, out, **kw):
    base = dict(epochs=2, batch_size=8, dataset_root=str(root), out_dir=str(out), input_hw=32,
                conv_widths=(8, 16), dense_widths=(32, 16), val_fraction=0.2)
    base.update(kw)
    return ExperimentConfig(**base)


def constant_model(num_classes, winner=0, hw=16):
    """A model whose logits ignore the input and always favour ``winner``."""
    model = build_model(ArchConfig.toy(num_classes, hw))
    model.layer("dense_2").params["kernel"][:] = 0
    bias = np.zeros(num_classes, np.float32)
    bias[winner] = 1
    model.layer("dense_2").params["bias"] = bias
    return model.set_mode("inference")
