from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, ShapeError

ALGORITHMS = ("adam", "sgd_momentum")


@dataclass
class OptimizerState:
    algorithm: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    momentum: float = 0.9
    step: int = 0
    moments: dict[str, tuple[np.ndarray, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown optimizer {self.algorithm!r}")


def optimizer_step(model, grads: dict[str, np.ndarray], state: OptimizerState):
    """Apply one update in place to ``model`` and ``state``.

    All gradients are validated before any parameter is touched, so a
    non-finite gradient aborts the whole step.
    """
    params = model.trainable_parameters()
    if set(grads) != set(params):
        raise ShapeError("gradient set does not match the model's trainable parameters")
    for key, g in grads.items():
        if g.shape != params[key].shape:
            raise ShapeError(f"{key}: gradient {g.shape} vs parameter {params[key].shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {key}")

    state.step += 1
    t = state.step
    lr = np.float32(state.learning_rate)
    for key, p in params.items():
        g = grads[key].astype(np.float32, copy=False)
        if state.algorithm == "adam":
            m, v = state.moments.get(key) or (np.zeros_like(p), np.zeros_like(p))
            m = np.float32(state.beta1) * m + np.float32(1 - state.beta1) * g
            v = np.float32(state.beta2) * v + np.float32(1 - state.beta2) * (g * g)
            m_hat = m / np.float32(1 - state.beta1 ** t)
            v_hat = v / np.float32(1 - state.beta2 ** t)
            new_p = p - lr * m_hat / (np.sqrt(v_hat) + np.float32(state.epsilon))
            state.moments[key] = (m, v)
        else:
            (vel,) = state.moments.get(key) or (np.zeros_like(p),)
            vel = np.float32(state.momentum) * vel - lr * g
            new_p = p + vel
            state.moments[key] = (vel,)
        model.set_parameter(key, new_p.astype(np.float32, copy=False))
    return model, state
