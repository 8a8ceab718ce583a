"""The reference layer stack and its parameterised toy reductions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from ..errors import ShapeError
from ..rng import SplitMix64, derive_seed
from . import layers as L

TRAIN = "train"
INFERENCE = "inference"


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv2d | batch_norm | max_pool | flatten | dense | relu
    name: str
    units: int = 0  # conv filters, dense width or BN channels

    KERAS_TYPES = {
        "conv2d": "Conv2D", "batch_norm": "BatchNormalization",
        "max_pool": "MaxPooling2D", "flatten": "Flatten", "dense": "Dense",
        "relu": "ReLU",
    }

    @property
    def display(self) -> str:
        return f"{self.name} ({self.KERAS_TYPES[self.kind]})"


class Layer:
    trainable: tuple[str, ...] = ()
    non_trainable: tuple[str, ...] = ()

    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def name(self):
        return self.spec.name

    def build(self, in_shape, rng_seed):
        return in_shape

    def param_count(self) -> tuple[int, int]:
        tr = sum(self.params[k].size for k in self.trainable)
        nt = sum(self.params[k].size for k in self.non_trainable)
        return tr, nt

    def forward(self, x, train):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


def _he_uniform(shape, fan_in, seed):
    limit = math.sqrt(6.0 / fan_in)
    u = SplitMix64(seed).random_array(int(np.prod(shape)))
    return ((2.0 * u - 1.0) * limit).astype(np.float32).reshape(shape)


class Conv2D(Layer):
    trainable = ("kernel", "bias")

    def build(self, in_shape, seed):
        h, w, cin = in_shape
        cout = self.spec.units
        self.params["kernel"] = _he_uniform((3, 3, cin, cout), 9 * cin,
                                            derive_seed(seed, self.name, "kernel"))
        self.params["bias"] = np.zeros(cout, np.float32)
        return (h, w, cout)

    def forward(self, x, train):
        self._cache = x
        return L.conv2d_forward(x, self.params["kernel"], self.params["bias"])

    def backward(self, dy):
        dx, dw, db = L.conv2d_backward(self._cache, self.params["kernel"], dy)
        self.grads = {"kernel": dw, "bias": db}
        return dx


class BatchNorm(Layer):
    trainable = ("gamma", "beta")
    non_trainable = ("moving_mean", "moving_variance")

    def build(self, in_shape, seed):
        c = in_shape[-1]
        self.params["gamma"] = np.ones(c, np.float32)
        self.params["beta"] = np.zeros(c, np.float32)
        self.params["moving_mean"] = np.zeros(c, np.float32)
        self.params["moving_variance"] = np.ones(c, np.float32)
        return in_shape

    def forward(self, x, train):
        p = self.params
        y, self._cache, mm, mv = L.batchnorm_forward(
            x, p["gamma"], p["beta"], p["moving_mean"], p["moving_variance"], train)
        if train:
            p["moving_mean"], p["moving_variance"] = mm, mv
        return y

    def backward(self, dy):
        dx, dgamma, dbeta = L.batchnorm_backward(dy, self._cache)
        self.grads = {"gamma": dgamma, "beta": dbeta}
        return dx


class MaxPool(Layer):
    def build(self, in_shape, seed):
        h, w, c = in_shape
        if h < 2 or w < 2:
            raise ShapeError(f"{self.name}: cannot pool spatial size {h}x{w}")
        return (h // 2, w // 2, c)

    def forward(self, x, train):
        y, arg = L.maxpool_forward(x)
        self._cache = (arg, x.shape)
        return y

    def backward(self, dy):
        arg, shape = self._cache
        return L.maxpool_backward(arg, dy, shape)


class ReLU(Layer):
    def forward(self, x, train):
        self._cache = x
        return L.relu_forward(x)

    def backward(self, dy):
        return L.relu_backward(self._cache, dy)


class Flatten(Layer):
    def build(self, in_shape, seed):
        return (int(np.prod(in_shape)),)

    def forward(self, x, train):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._cache)


class Dense(Layer):
    trainable = ("kernel", "bias")

    def build(self, in_shape, seed):
        (fan_in,) = in_shape
        out = self.spec.units
        self.params["kernel"] = _he_uniform((fan_in, out), fan_in,
                                            derive_seed(seed, self.name, "kernel"))
        self.params["bias"] = np.zeros(out, np.float32)
        return (out,)

    def forward(self, x, train):
        self._cache = x
        return L.dense_forward(x, self.params["kernel"], self.params["bias"])

    def backward(self, dy):
        dx, dw, db = L.dense_backward(self._cache, self.params["kernel"], dy)
        self.grads = {"kernel": dw, "bias": db}
        return dx


_LAYER_TYPES = {
    "conv2d": Conv2D, "batch_norm": BatchNorm, "max_pool": MaxPool,
    "relu": ReLU, "flatten": Flatten, "dense": Dense,
}


@dataclass(frozen=True)
class ArchConfig:
    """Architecture knobs. The defaults give the 440,966-parameter reference network.

    Each conv stage is conv -> BN -> ReLU -> pool; the first
    ``post_pool_bn`` stages get one more BN after the pool.
    """

    num_classes: int = 6
    input_hw: int = 224
    channels: int = 3
    conv_widths: tuple[int, ...] = (32, 32, 64, 64, 128, 128)
    dense_widths: tuple[int, ...] = (128, 32)
    post_pool_bn: int = 2

    @classmethod
    def toy(cls, num_classes=3, input_hw=16, conv_widths=(4, 8), dense_widths=(16, 8)):
        return cls(num_classes, input_hw, 3, tuple(conv_widths), tuple(dense_widths),
                   min(2, len(conv_widths)))

    def to_dict(self):
        return {
            "num_classes": self.num_classes, "input_hw": self.input_hw,
            "channels": self.channels, "conv_widths": list(self.conv_widths),
            "dense_widths": list(self.dense_widths), "post_pool_bn": self.post_pool_bn,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["num_classes"]), int(d["input_hw"]), int(d["channels"]),
                   tuple(d["conv_widths"]), tuple(d["dense_widths"]), int(d["post_pool_bn"]))

    def layer_specs(self) -> list[LayerSpec]:
        counters: dict[str, int] = {}

        def spec(kind, base, units=0):
            k = counters.get(base, 0)
            counters[base] = k + 1
            return LayerSpec(kind, base if k == 0 else f"{base}_{k}", units)

        specs = []
        for stage, width in enumerate(self.conv_widths):
            specs.append(spec("conv2d", "conv2d", width))
            specs.append(spec("batch_norm", "batch_normalization", width))
            specs.append(spec("relu", "re_lu"))
            specs.append(spec("max_pool", "max_pooling2d"))
            if stage < self.post_pool_bn:
                specs.append(spec("batch_norm", "batch_normalization", width))
        specs.append(spec("flatten", "flatten"))
        for width in self.dense_widths:
            specs.append(spec("dense", "dense", width))
            specs.append(spec("relu", "re_lu"))
        specs.append(spec("dense", "dense", self.num_classes))
        return specs


@dataclass
class SummaryRow:
    name: str
    display: str
    output_shape: tuple
    params: int


@dataclass
class Model:
    arch: ArchConfig
    layers: list[Layer]
    output_shapes: list[tuple]
    mode: str = field(default=TRAIN)

    def set_mode(self, mode: str) -> "Model":
        if mode not in (TRAIN, INFERENCE):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        return self

    def forward(self, x: np.ndarray) -> np.ndarray:
        train = self.mode == TRAIN
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Backpropagate ``dlogits`` through the cached forward pass.

        Returns the gradient set keyed like :meth:`trainable_parameters`.
        """
        dy = dlogits
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return {f"{layer.name}/{k}": layer.grads[k]
                for layer in self.layers for k in layer.trainable}

    def parameters(self) -> dict[str, np.ndarray]:
        """Every parameter tensor (trainable and moving statistics) in layer order."""
        return {f"{layer.name}/{k}": v for layer in self.layers for k, v in layer.params.items()}

    def trainable_parameters(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}/{k}": layer.params[k]
                for layer in self.layers for k in layer.trainable}

    def set_parameter(self, key: str, value: np.ndarray) -> None:
        lname, pname = key.split("/")
        layer = self.layer(lname)
        if layer.params[pname].shape != value.shape:
            raise ShapeError(f"{key}: shape {value.shape} != {layer.params[pname].shape}")
        layer.params[pname] = value

    def layer(self, name: str) -> Layer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def param_counts(self) -> tuple[int, int, int]:
        """(total, trainable, non-trainable)."""
        tr = nt = 0
        for layer in self.layers:
            a, b = layer.param_count()
            tr += a
            nt += b
        return tr + nt, tr, nt

    def summary(self) -> list[SummaryRow]:
        """Rows in reference-summary order; ReLU layers are folded into their producers."""
        return [SummaryRow(layer.name, layer.spec.display, (None,) + tuple(shape),
                           sum(layer.param_count()))
                for layer, shape in zip(self.layers, self.output_shapes)
                if layer.spec.kind != "relu"]

    def astype(self, dtype) -> "Model":
        """Deep copy with every parameter cast to ``dtype``."""
        clone = build_model(self.arch, seed=0)
        for key, value in self.parameters().items():
            lname, pname = key.split("/")
            clone.layer(lname).params[pname] = value.astype(dtype, copy=True)
        clone.mode = self.mode
        return clone

    def copy(self) -> "Model":
        return self.astype(np.float32)


def build_model(arch: ArchConfig, seed: int = 0) -> Model:
    shape = (arch.input_hw, arch.input_hw, arch.channels)
    built, shapes = [], []
    for spec in arch.layer_specs():
        layer = _LAYER_TYPES[spec.kind](spec)
        shape = layer.build(shape, seed)
        built.append(layer)
        shapes.append(tuple(shape))
    return Model(arch, built, shapes)


def build_table1_model(num_classes: int = 6, input_hw: int = 224, seed: int = 0) -> Model:
    return build_model(ArchConfig(num_classes=num_classes, input_hw=input_hw), seed)


def analytic_param_count(arch: ArchConfig) -> tuple[int, int]:
    """(trainable, non-trainable) from closed-form per-layer formulas."""
    tr = nt = 0
    cin = arch.channels
    hw = arch.input_hw
    for stage, c in enumerate(arch.conv_widths):
        tr += 9 * cin * c + c
        n_bn = 2 if stage < arch.post_pool_bn else 1
        tr += n_bn * 2 * c
        nt += n_bn * 2 * c
        cin = c
        hw //= 2
    fan_in = hw * hw * cin
    for out in (*arch.dense_widths, arch.num_classes):
        tr += fan_in * out + out
        fan_in = out
    return tr, nt

