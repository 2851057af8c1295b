"""Minimal float64 tensor core: reverse-mode tape, gradient checking, optimizers."""

from .gradcheck import grad_check, grad_check_params
from .optim import (
    DEFAULT_LEARNING_RATES,
    OPTIMIZER_KINDS,
    Adadelta,
    Adam,
    Optimizer,
    SGD,
    clip_global_norm,
    make_optimizer,
)
from .params import const, uniform_param, zeros_param
from .engine import (
    NumericError,
    PRIMITIVES,
    ShapeError,
    Tape,
    TapeError,
    TapeNode,
    Tensor,
    add,
    apply_primitive,
    backward,
    concat,
    cross_entropy_with_logits,
    cumulative_sum,
    embedding_lookup,
    exp,
    matmul,
    mean,
    mul,
    no_grad,
    recording,
    relu,
    reshape,
    scalar,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
    tensor,
)

__all__ = [
    "Adadelta", "Adam", "DEFAULT_LEARNING_RATES", "NumericError",
    "OPTIMIZER_KINDS", "Optimizer", "PRIMITIVES", "SGD", "ShapeError",
    "Tape", "TapeError", "TapeNode", "Tensor", "add", "apply_primitive",
    "backward", "clip_global_norm", "concat", "const",
    "cross_entropy_with_logits", "cumulative_sum", "embedding_lookup", "exp",
    "grad_check", "grad_check_params", "make_optimizer", "matmul", "mean",
    "mul", "no_grad", "recording", "relu", "reshape", "scalar", "sigmoid", "slice_",
    "softmax", "sub", "sum_", "tanh", "tensor", "uniform_param", "zeros_param",
]
