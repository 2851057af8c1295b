"""SGD, Adam and Adadelta over named parameter lists, plus global-norm clipping."""

from __future__ import annotations

import math

import numpy as np

from .engine import NumericError, Tensor

OPTIMIZER_KINDS = ("sgd", "adam", "adadelta")


class Optimizer:
    """Shared bookkeeping: one accumulator set per registered parameter."""

    kind = "base"

    def __init__(self, params, lr: float):
        self.params: list[Tensor] = list(params)
        if not self.params:
            raise ValueError("optimizer: empty parameter list")
        self.lr = lr
        self.step_count = 0

    def _grads(self) -> list[np.ndarray]:
        grads = []
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ValueError(f"optimizer: parameter {i} has no gradient")
            grads.append(p.grad)
        return grads

    def _apply(self, p: Tensor, delta: np.ndarray) -> None:
        if not math.isfinite(float(delta.sum())):
            raise NumericError(f"{self.kind}: non-finite parameter update")
        p.data += delta

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def __init__(self, params, lr: float = 0.1):
        super().__init__(params, lr)

    def step(self) -> None:
        for p, g in zip(self.params, self._grads()):
            self._apply(p, -self.lr * g)
        self.step_count += 1


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, params, lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8):
        super().__init__(params, lr)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        grads = self._grads()
        t = self.step_count + 1
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = -self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            self._apply(p, update)
        self.step_count = t


class Adadelta(Optimizer):
    kind = "adadelta"

    def __init__(self, params, lr: float = 1.0, rho: float = 0.95, eps: float = 1e-6):
        super().__init__(params, lr)
        self.rho = rho
        self.eps = eps
        self.sq_grad = [np.zeros_like(p.data) for p in self.params]
        self.sq_update = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        grads = self._grads()
        for p, g, eg, ed in zip(self.params, grads, self.sq_grad, self.sq_update):
            eg *= self.rho
            eg += (1.0 - self.rho) * g * g
            delta = -np.sqrt(ed + self.eps) / np.sqrt(eg + self.eps) * g
            ed *= self.rho
            ed += (1.0 - self.rho) * delta * delta
            self._apply(p, self.lr * delta)
        self.step_count += 1


DEFAULT_LEARNING_RATES = {"sgd": 0.1, "adam": 1e-3, "adadelta": 1.0}


def make_optimizer(kind: str, params, lr: float | None = None) -> Optimizer:
    if kind not in OPTIMIZER_KINDS:
        raise ValueError(f"unknown optimizer kind '{kind}'")
    if lr is None:
        lr = DEFAULT_LEARNING_RATES[kind]
    if kind == "sgd":
        return SGD(params, lr=lr)
    if kind == "adam":
        return Adam(params, lr=lr)
    return Adadelta(params, lr=lr)


def clip_global_norm(params, max_norm: float = 5.0) -> float:
    """Scale all gradients so their joint L2 norm is at most `max_norm`.

    Returns the pre-clip norm.
    """
    total = 0.0
    grads = [p.grad for p in params if p.grad is not None]
    for g in grads:
        total += float((g * g).sum())
    norm = math.sqrt(total)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm
