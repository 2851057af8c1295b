"""Central-difference gradient checking for scalar-valued tensor functions."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .engine import Tape, Tensor, backward, no_grad, recording


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must be scalar-valued and evaluable repeatedly at perturbed inputs.
    The error at each coordinate is |analytic - numeric| / max(1, |analytic|,
    |numeric|); the max over coordinates is returned.
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")

    probe = Tensor(x.data.copy(), requires_grad=True)
    with recording() as tape:
        out = f(probe)
    if out.data.ndim != 0 and out.data.shape != (1,):
        raise ValueError(f"grad_check: f must be scalar-valued, got shape {out.shape}")
    if out.requires_grad:
        backward(tape, out)
    analytic = probe.grad if probe.grad is not None else np.zeros_like(probe.data)

    numeric = np.zeros_like(probe.data)
    flat_num = numeric.reshape(-1)
    base = probe.data.reshape(-1)
    with no_grad():
        for i in range(base.size):
            orig = base[i]
            base[i] = orig + eps
            hi = float(f(probe).data)
            base[i] = orig - eps
            lo = float(f(probe).data)
            base[i] = orig
            if not (math.isfinite(hi) and math.isfinite(lo)):
                raise ValueError("grad_check: non-finite perturbed evaluation")
            flat_num[i] = (hi - lo) / (2.0 * eps)

    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    err = np.abs(analytic - numeric) / denom
    return float(err.max()) if err.size else 0.0


def grad_check_params(f: Callable[[], Tensor], params: Iterable[Tensor],
                      eps: float = 1e-5) -> float:
    """Check the gradient of a closure against each of its parameters.

    `f` is a thunk that evaluates a scalar loss from the parameters' current
    values.  Each parameter is perturbed in place for the numeric side.
    Returns the worst relative error over all parameters and coordinates.
    """
    params = list(params)
    for p in params:
        p.grad = None
    with recording() as tape:
        out = f()
    if out.data.ndim != 0 and out.data.shape != (1,):
        raise ValueError(f"grad_check_params: f must be scalar-valued, got {out.shape}")
    backward(tape, out)

    worst = 0.0
    with no_grad():
        for p in params:
            analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
            flat = p.data.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                hi = float(f().data)
                flat[i] = orig - eps
                lo = float(f().data)
                flat[i] = orig
                if not (math.isfinite(hi) and math.isfinite(lo)):
                    raise ValueError("grad_check_params: non-finite perturbed evaluation")
                numeric = (hi - lo) / (2.0 * eps)
                a = float(analytic.reshape(-1)[i])
                err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
                worst = max(worst, err)
            p.grad = None
    return worst
