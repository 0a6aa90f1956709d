"""
Adam with bias correction.

Example:
    opt = Adam(lr=1e-3)
    opt.step(params, grads)     # grads: name -> array, same shapes as params
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from exceptions import NumericError
from services.gnn.params import ModelParams

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    step: int = 0
    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ModelParams, grads: Dict[str, np.ndarray], state: AdamState, lr: float) -> AdamState:
    """
    Apply one Adam update in place.

    Raises:
        NumericError: a gradient holds NaN or Inf (the message names the parameter)
    """
    for name, grad in grads.items():
        if not np.isfinite(grad).all():
            raise NumericError(f"non-finite gradient for parameter {name}")

    state.step += 1
    correction1 = 1.0 - BETA1 ** state.step
    correction2 = 1.0 - BETA2 ** state.step
    for name, grad in grads.items():
        m = state.first.get(name)
        v = state.second.get(name)
        m = (1.0 - BETA1) * grad if m is None else BETA1 * m + (1.0 - BETA1) * grad
        v = (1.0 - BETA2) * grad * grad if v is None else BETA2 * v + (1.0 - BETA2) * grad * grad
        state.first[name], state.second[name] = m, v

        update = lr * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
        tensor = params[name]
        tensor.values = tensor.values - update
    return state


class Adam:
    def __init__(self, lr: float = 1e-3):
        self.lr = lr
        self.state = AdamState()

    def step(self, params: ModelParams, grads: Dict[str, np.ndarray]) -> None:
        adam_step(params, grads, self.state, self.lr)
