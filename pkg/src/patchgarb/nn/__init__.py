from .checkpoint import checkpoint_load, checkpoint_save
from .layers import (batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward,
                     dense_backward, dense_forward, maxpool_backward, maxpool_forward,
                     softmax_cross_entropy)
from .model import (INFERENCE, TRAIN, ArchConfig, LayerSpec, Model, analytic_param_count,
                    build_model, build_table1_model)
from .optim import OptimizerState, optimizer_step


def model_forward(model: Model, batch):
    return model.forward(batch)


def model_backward(model: Model, dlogits):
    return model.backward(dlogits)


__all__ = [
    "INFERENCE", "TRAIN", "ArchConfig", "LayerSpec", "Model", "OptimizerState",
    "analytic_param_count", "batchnorm_backward", "batchnorm_forward", "build_model",
    "build_table1_model", "checkpoint_load", "checkpoint_save", "conv2d_backward",
    "conv2d_forward", "dense_backward", "dense_forward", "maxpool_backward", "maxpool_forward",
    "model_backward", "model_forward", "optimizer_step", "softmax_cross_entropy",
]
