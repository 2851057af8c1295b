"""Parameter creation helpers: fan-in scaled uniform init, zeros, constants."""

from __future__ import annotations

import numpy as np

from .engine import Tensor


def uniform_param(rng: np.random.Generator, shape: tuple[int, ...],
                  fan_in: int | None = None) -> Tensor:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].

    fan_in defaults to the last dimension, matching the (out, in) weight
    layout used throughout the models.
    """
    if fan_in is None:
        fan_in = shape[-1]
    bound = 1.0 / np.sqrt(float(fan_in))
    data = rng.uniform(-bound, bound, size=shape)
    return Tensor(data, requires_grad=True)


def zeros_param(shape: tuple[int, ...]) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def const(value, requires_grad: bool = False) -> Tensor:
    return Tensor(np.asarray(value, dtype=np.float64), requires_grad=requires_grad)
