"""Dense float64 tensors with a define-by-run reverse-mode tape.

The graph is rebuilt on every forward pass: each primitive application is
appended to the active ``Tape`` together with the saved state its backward
rule needs.  Tapes are topologically ordered by construction, so ``backward``
is a single reverse sweep.  Everything is 64-bit; non-finite values raise
immediately instead of propagating.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from typing import Callable, NamedTuple

import numpy as np


class ShapeError(ValueError):
    """Input shapes violate a primitive's contract."""


class NumericError(ArithmeticError):
    """A primitive produced a NaN or Inf."""


class TapeError(RuntimeError):
    """Backward was asked for something the tape cannot provide."""


class Tensor:
    """A dense float64 array plus an optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NumericError("tensor constructed with non-finite values")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def copy_data(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def scalar(x: float) -> Tensor:
    return Tensor(float(x))


def _wrap(data: np.ndarray) -> Tensor:
    """Fast-path construction: data is trusted to be float64 and finite."""
    t = Tensor.__new__(Tensor)
    t.data = data
    t.requires_grad = False
    t.grad = None
    return t


class TapeNode(NamedTuple):
    """One recorded primitive application."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    saved: tuple
    backward: Callable


class Tape:
    """Ordered record of primitive applications for one forward pass."""

    __slots__ = ("nodes",)

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def reset(self) -> None:
        self.nodes.clear()


_TAPE_STACK: list[Tape] = []
_GRAD_ENABLED: list[bool] = [True]


def _active_tape() -> Tape | None:
    if _GRAD_ENABLED[-1] and _TAPE_STACK:
        return _TAPE_STACK[-1]
    return None


@contextmanager
def recording(tape: Tape | None = None):
    """Activate a tape for the duration of the block and yield it."""
    tp = tape if tape is not None else Tape()
    _TAPE_STACK.append(tp)
    try:
        yield tp
    finally:
        _TAPE_STACK.pop()


@contextmanager
def no_grad():
    """Disable recording; forwards run plain with no tape growth."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def _check_finite(op: str, data: np.ndarray) -> None:
    # cheap single-pass probe: any NaN/Inf in the array poisons the sum.
    # Only primitives that can overflow carry this probe; bounded ops
    # (sigmoid, tanh, softmax, relu, concat, slice, lookups, the stabilized
    # cross-entropy) cannot produce non-finite values from finite inputs,
    # which the constructor and the probed ops guarantee inductively.
    if not math.isfinite(float(data.sum())):
        raise NumericError(f"primitive '{op}' produced a non-finite value")


def _record(op: str, inputs: tuple[Tensor, ...], out: Tensor, saved: tuple,
            backward: Callable) -> Tensor:
    tape = _active_tape()
    if tape is not None:
        for t in inputs:
            if t.requires_grad:
                out.requires_grad = True
                tape.nodes.append(TapeNode(op, inputs, out, saved, backward))
                break
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def _bk_add(node: TapeNode, g: np.ndarray):
    a, b = node.inputs
    return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = _wrap(a.data + b.data)
    except ValueError as e:
        raise ShapeError(f"add: {a.shape} vs {b.shape}") from e
    _check_finite("add", out.data)
    return _record("add", (a, b), out, (), _bk_add)


def _bk_sub(node: TapeNode, g: np.ndarray):
    a, b = node.inputs
    return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = _wrap(a.data - b.data)
    except ValueError as e:
        raise ShapeError(f"sub: {a.shape} vs {b.shape}") from e
    _check_finite("sub", out.data)
    return _record("sub", (a, b), out, (), _bk_sub)


def _bk_mul(node: TapeNode, g: np.ndarray):
    a, b = node.inputs
    return (_unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape))


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = _wrap(a.data * b.data)
    except ValueError as e:
        raise ShapeError(f"mul: {a.shape} vs {b.shape}") from e
    _check_finite("mul", out.data)
    return _record("mul", (a, b), out, (), _bk_mul)


def _bk_matmul(node: TapeNode, g: np.ndarray):
    a, b = node.inputs
    ad, bd = a.data, b.data
    if ad.ndim == 1 and bd.ndim == 1:  # dot -> scalar
        return g * bd, g * ad
    if ad.ndim == 1:   # (k,) @ (k,n) -> (n,)
        return bd @ g, ad[:, None] * g[None, :]
    if bd.ndim == 1:   # (m,k) @ (k,) -> (m,)
        return g[:, None] * bd[None, :], ad.T @ g
    return g @ bd.T, ad.T @ g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim > 2 or b.data.ndim > 2:
        raise ShapeError(f"matmul: only 1-D/2-D operands, got {a.shape} @ {b.shape}")
    try:
        out = _wrap(a.data @ b.data)
    except ValueError as e:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}") from e
    _check_finite("matmul", out.data)
    return _record("matmul", (a, b), out, (), _bk_matmul)


def _bk_concat(node: TapeNode, g: np.ndarray):
    axis, sizes = node.saved
    splits = np.cumsum(sizes[:-1])
    return tuple(np.split(g, splits, axis=axis))


def concat(tensors, axis: int = 0) -> Tensor:
    ts = tuple(tensors)
    if not ts:
        raise ShapeError("concat: needs at least one input")
    try:
        out = _wrap(np.concatenate([t.data for t in ts], axis=axis))
    except ValueError as e:
        raise ShapeError(f"concat: {[t.shape for t in ts]} along axis {axis}") from e
    sizes = tuple(t.data.shape[axis] for t in ts)
    return _record("concat", ts, out, (axis, sizes), _bk_concat)


def _bk_slice(node: TapeNode, g: np.ndarray):
    (x,) = node.inputs
    start, stop, axis = node.saved
    gx = np.zeros_like(x.data)
    idx = [slice(None)] * gx.ndim
    idx[axis] = slice(start, stop)
    gx[tuple(idx)] = g
    return (gx,)


def slice_(x: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    if axis >= x.data.ndim or not (0 <= start <= stop <= x.data.shape[axis]):
        raise ShapeError(f"slice: [{start}:{stop}] on axis {axis} of {x.shape}")
    idx = [slice(None)] * x.data.ndim
    idx[axis] = slice(start, stop)
    out = _wrap(np.ascontiguousarray(x.data[tuple(idx)]))
    return _record("slice", (x,), out, (start, stop, axis), _bk_slice)


def _bk_sigmoid(node: TapeNode, g: np.ndarray):
    (s,) = node.saved
    return (g * s * (1.0 - s),)


def sigmoid(x: Tensor) -> Tensor:
    # stable two-branch form, never exponentiates a positive argument
    d = x.data
    e = np.exp(-np.abs(d))
    out_data = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = _wrap(out_data)
    return _record("sigmoid", (x,), out, (out_data,), _bk_sigmoid)


def _bk_tanh(node: TapeNode, g: np.ndarray):
    (t,) = node.saved
    return (g * (1.0 - t * t),)


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)
    out = _wrap(out_data)
    return _record("tanh", (x,), out, (out_data,), _bk_tanh)


def _bk_relu(node: TapeNode, g: np.ndarray):
    (x,) = node.inputs
    return (g * (x.data > 0),)


def relu(x: Tensor) -> Tensor:
    out = _wrap(np.maximum(x.data, 0.0))
    return _record("relu", (x,), out, (), _bk_relu)


def _bk_exp(node: TapeNode, g: np.ndarray):
    (e,) = node.saved
    return (g * e,)


def exp(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out_data = np.exp(x.data)
    _check_finite("exp", out_data)
    out = _wrap(out_data)
    return _record("exp", (x,), out, (out_data,), _bk_exp)


def _bk_softmax(node: TapeNode, g: np.ndarray):
    s, axis = node.saved
    dot = np.sum(g * s, axis=axis, keepdims=True)
    return (s * (g - dot),)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    d = x.data
    shifted = d - d.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)
    out = _wrap(out_data)
    return _record("softmax", (x,), out, (out_data, axis), _bk_softmax)


def _bk_cumsum(node: TapeNode, g: np.ndarray):
    (axis,) = node.saved
    rev = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
    return (np.ascontiguousarray(rev),)


def cumulative_sum(x: Tensor, axis: int = -1) -> Tensor:
    out_data = np.cumsum(x.data, axis=axis)
    _check_finite("cumulative_sum", out_data)
    out = _wrap(out_data)
    return _record("cumulative_sum", (x,), out, (axis,), _bk_cumsum)


def _bk_sum(node: TapeNode, g: np.ndarray):
    (x,) = node.inputs
    (axis,) = node.saved
    if axis is None:
        return (np.full_like(x.data, float(g)),)
    return (np.broadcast_to(np.expand_dims(g, axis), x.data.shape).copy(),)


def sum_(x: Tensor, axis: int | None = None) -> Tensor:
    out_data = np.asarray(x.data.sum(axis=axis))
    _check_finite("sum", out_data)
    out = _wrap(out_data)
    return _record("sum", (x,), out, (axis,), _bk_sum)


def _bk_mean(node: TapeNode, g: np.ndarray):
    (x,) = node.inputs
    axis, n = node.saved
    if axis is None:
        return (np.full_like(x.data, float(g) / n),)
    return (np.broadcast_to(np.expand_dims(g / n, axis), x.data.shape).copy(),)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    out_data = np.asarray(x.data.mean(axis=axis))
    _check_finite("mean", out_data)
    out = _wrap(out_data)
    n = x.data.size if axis is None else x.data.shape[axis]
    return _record("mean", (x,), out, (axis, n), _bk_mean)


def _bk_reshape(node: TapeNode, g: np.ndarray):
    (x,) = node.inputs
    return (g.reshape(x.data.shape),)


def reshape(x: Tensor, shape) -> Tensor:
    try:
        out = _wrap(np.ascontiguousarray(x.data).reshape(shape))
    except ValueError as e:
        raise ShapeError(f"reshape: {x.shape} -> {shape}") from e
    return _record("reshape", (x,), out, (), _bk_reshape)


def _bk_embedding(node: TapeNode, g: np.ndarray):
    (table,) = node.inputs
    (ids,) = node.saved
    gt = np.zeros_like(table.data)
    np.add.at(gt, ids, g)
    return (gt,)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Row lookup. An int id yields a vector; a sequence yields a matrix."""
    if table.data.ndim != 2:
        raise ShapeError(f"embedding_lookup: table must be 2-D, got {table.shape}")
    single = isinstance(ids, (int, np.integer))
    idx = np.asarray([ids] if single else ids, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= table.data.shape[0]):
        raise ShapeError(
            f"embedding_lookup: id out of range for table with "
            f"{table.data.shape[0]} rows")
    rows = table.data[idx]
    out = _wrap(rows[0].copy() if single else rows)
    saved_ids = idx[:1] if single else idx
    return _record("embedding_lookup", (table,), out, (saved_ids,), _bk_embedding)


def _bk_cross_entropy(node: TapeNode, g: np.ndarray):
    p, label = node.saved
    gx = p.copy()
    gx[label] -= 1.0
    return (gx * float(g),)


def cross_entropy_with_logits(logits: Tensor, label: int) -> Tensor:
    """Scalar negative log-likelihood of `label` under softmax(logits)."""
    d = logits.data
    if d.ndim != 1:
        raise ShapeError(f"cross_entropy_with_logits: logits must be 1-D, got {logits.shape}")
    if not 0 <= label < d.shape[0]:
        raise ShapeError(f"cross_entropy_with_logits: label {label} out of range")
    shifted = d - d.max()
    e = np.exp(shifted)
    z = e.sum()
    p = e / z
    loss = np.asarray(math.log(z) - shifted[label])
    out = _wrap(loss)
    return _record("cross_entropy_with_logits", (logits,), out, (p, label),
                   _bk_cross_entropy)


PRIMITIVES: dict[str, Callable] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "matmul": matmul,
    "concat": concat,
    "slice": slice_,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "exp": exp,
    "reshape": reshape,
    "softmax": softmax,
    "cumulative_sum": cumulative_sum,
    "sum": sum_,
    "mean": mean,
    "embedding_lookup": embedding_lookup,
    "cross_entropy_with_logits": cross_entropy_with_logits,
}


def apply_primitive(op: str, *inputs, **kwargs) -> Tensor:
    """Apply a registered primitive by id."""
    fn = PRIMITIVES.get(op)
    if fn is None:
        raise ShapeError(f"unknown primitive '{op}'")
    if op == "concat":
        return fn(inputs, **kwargs)
    return fn(*inputs, **kwargs)


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------

def backward(tape: Tape, loss: Tensor) -> None:
    """Reverse sweep: populate .grad on every requires_grad leaf of `loss`.

    Leaf gradients accumulate across calls (batch accumulation); the tape is
    reset afterwards.
    """
    if loss.data.ndim != 0 and loss.data.shape != (1,):
        raise TapeError(f"backward: loss must be scalar-shaped, got {loss.shape}")
    if not any(n.output is loss for n in tape.nodes):
        raise TapeError("backward: loss was not produced on this tape")

    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        g = node.output.grad
        if g is None:
            continue
        grads = node.backward(node, g)
        for t, gi in zip(node.inputs, grads):
            if not t.requires_grad:
                continue
            if t.grad is None:
                if gi is g or gi.base is not None:
                    gi = gi.copy()
                t.grad = gi
            else:
                # first assignment always leaves us the sole owner
                t.grad += gi
    tape.reset()
