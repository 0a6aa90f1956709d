"""
Dense float64 tensors with a reverse-mode tape.

Operations run eagerly. While a Tape is active, every operation with at least
one input that requires grad is appended to it together with its backward rule;
`backward(tape, loss)` then replays the records once, in reverse order.

Example:
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        loss = reduce_sum(hadamard(x, x))
    (gx,) = backward(tape, loss, [x])   # [2., 4.]
"""

from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logsumexp as _logsumexp

from exceptions import ContractError, NumericError, ShapeError

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("active_tape", default=None)


class Tensor:
    __slots__ = ("values", "requires_grad", "grad", "node_id", "name")

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.values = np.array(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node_id: Optional[int] = None  # position on the tape that produced it
        self.name = name

    @classmethod
    def _wrap(cls, values: np.ndarray) -> "Tensor":
        out = cls.__new__(cls)
        out.values = values
        out.requires_grad = False
        out.grad = None
        out.node_id = None
        out.name = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    def numpy(self) -> np.ndarray:
        return self.values

    def item(self) -> float:
        return float(self.values.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.values)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return hadamard(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        tag = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"


@dataclass
class Record:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Ordered record of operations; confined to the thread/worker that created it."""

    def __init__(self):
        self.records: List[Record] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None
        return False

    def record(self, op: str, inputs, output: Tensor, rule) -> None:
        output.node_id = len(self.records)
        self.records.append(Record(op, tuple(inputs), output, rule))

    def leaves(self) -> List[Tensor]:
        """Tensors that require grad but were not produced on this tape."""
        seen, leaves = set(), []
        for rec in self.records:
            for t in rec.inputs:
                if t.requires_grad and t.node_id is None and id(t) not in seen:
                    seen.add(id(t))
                    leaves.append(t)
        return leaves

    def dump(self) -> str:
        lines = []
        for i, rec in enumerate(self.records):
            ins = ", ".join(
                f"#{t.node_id}" if t.node_id is not None else (t.name or f"leaf{tuple(t.shape)}")
                for t in rec.inputs
            )
            lines.append(f"#{i} {rec.op}({ins}) -> {tuple(rec.output.shape)}")
        return "\n".join(lines)

    def __len__(self):
        return len(self.records)


def backward(tape: Tape, loss: Tensor, wrt: Optional[Sequence[Tensor]] = None) -> List[np.ndarray]:
    """
    Reverse pass over the tape.

    Args:
        tape: Tape the loss was computed on
        loss: Scalar-shaped tensor
        wrt: Tensors to return gradients for (default: every leaf on the tape)

    Returns:
        One gradient per tensor in `wrt`; tensors the loss does not depend on get zeros.
        Each tensor's `.grad` is set as well.
    """
    if loss.values.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if wrt is None:
        wrt = tape.leaves()

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.output), None)
        if g is None:
            continue
        for tensor, partial in zip(rec.inputs, rec.backward(g)):
            if partial is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + partial
            else:
                grads[key] = partial

    result = []
    for tensor in wrt:
        g = grads.get(id(tensor))
        g = np.zeros_like(tensor.values) if g is None else np.asarray(g, dtype=np.float64).reshape(tensor.shape)
        tensor.grad = g
        result.append(g)
    return result


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _emit(op: str, values: np.ndarray, inputs: Sequence[Tensor], rule) -> Tensor:
    if not np.isfinite(values).all():
        bad = int(np.size(values) - np.isfinite(values).sum())
        raise NumericError(f"{op}: {bad} non-finite value(s) in output of shape {values.shape}")
    out = Tensor._wrap(values)
    if any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape = _ACTIVE_TAPE.get()
        if tape is not None:
            tape.record(op, inputs, out, rule)
    return out


# ==================== LINEAR ALGEBRA ====================

def matmul(a, b) -> Tensor:
    """
    a @ b. `a` may be a constant scipy sparse matrix (a graph operator), in which
    case only `b` receives a gradient.
    """
    b = as_tensor(b)
    if sp.issparse(a):
        if a.shape[1] != b.shape[0]:
            raise ShapeError("matmul", a.shape, b.shape)
        values = np.asarray(a @ b.values)
        return _emit("spmm", values, (b,), lambda g: (np.asarray(a.T @ g),))

    a = as_tensor(a)
    if a.values.ndim != 2 or b.values.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)

    def rule(g):
        if b.values.ndim == 1:
            return np.outer(g, b.values), a.values.T @ g
        return g @ b.values.T, a.values.T @ g

    return _emit("matmul", a.values @ b.values, (a, b), rule)


def transpose(a: Tensor) -> Tensor:
    a = as_tensor(a)
    if a.values.ndim != 2:
        raise ShapeError("transpose", a.shape)
    return _emit("transpose", a.values.T.copy(), (a,), lambda g: (g.T,))


def add(a, b) -> Tensor:
    """Elementwise sum; `b` may also be a row vector (bias) or a scalar."""
    a, b = as_tensor(a), as_tensor(b)
    kind = _broadcast_kind("add", a, b)
    return _emit("add", a.values + b.values, (a, b), lambda g: (g, _reduce_to(g, kind, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    kind = _broadcast_kind("sub", a, b)
    return _emit("sub", a.values - b.values, (a, b), lambda g: (g, -_reduce_to(g, kind, b.shape)))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _emit("scale", a.values * c, (a,), lambda g: (g * c,))


def hadamard(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError("hadamard", a.shape, b.shape)
    return _emit("hadamard", a.values * b.values, (a, b), lambda g: (g * b.values, g * a.values))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    ndim = tensors[0].values.ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.values.ndim != ndim or any(
            t.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeError("concat", *(t.shape for t in tensors))
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    values = np.concatenate([t.values for t in tensors], axis=axis)
    return _emit("concat", values, tensors, lambda g: tuple(np.split(g, cuts, axis=axis)))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    try:
        values = a.values.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, shape)
    return _emit("reshape", values, (a,), lambda g: (g.reshape(a.shape),))


# ==================== ELEMENTWISE ====================

def relu(a) -> Tensor:
    a = as_tensor(a)
    # subgradient at 0 is 0
    return _emit("relu", np.maximum(a.values, 0.0), (a,), lambda g: (g * (a.values > 0),))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = expit(a.values)
    return _emit("sigmoid", s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.values)
    return _emit("tanh", t, (a,), lambda g: (g * (1.0 - t * t),))


def softplus(a) -> Tensor:
    """log(1 + e^x), stable for any x."""
    a = as_tensor(a)
    return _emit("softplus", np.logaddexp(0.0, a.values), (a,), lambda g: (g * expit(a.values),))


def absolute(a) -> Tensor:
    a = as_tensor(a)
    return _emit("abs", np.abs(a.values), (a,), lambda g: (g * np.sign(a.values),))


# ==================== REDUCTIONS ====================

def reduce_sum(a, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)
    return _emit("reduce_sum", np.asarray(a.values.sum(axis=axis)), (a,),
                 lambda g: (_expand(g, a.shape, axis),))


def reduce_mean(a, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)
    n = a.values.size if axis is None else a.shape[axis]
    return _emit("reduce_mean", np.asarray(a.values.mean(axis=axis)), (a,),
                 lambda g: (_expand(g, a.shape, axis) / n,))


def reduce_max(a, axis: Optional[int] = None) -> Tensor:
    """Maximum; the gradient goes to the first arg-max."""
    a = as_tensor(a)
    values = np.asarray(a.values.max(axis=axis))

    def rule(g):
        grad = np.zeros_like(a.values)
        if axis is None:
            grad.reshape(-1)[np.argmax(a.values)] = np.asarray(g).reshape(-1)[0]
        else:
            idx = np.expand_dims(np.argmax(a.values, axis=axis), axis)
            np.put_along_axis(grad, idx, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return _emit("reduce_max", values, (a,), rule)


def logsumexp(a, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)
    values = np.asarray(_logsumexp(a.values, axis=axis))

    def rule(g):
        lse = values if axis is None else np.expand_dims(values, axis)
        return (_expand(g, a.shape, axis) * np.exp(a.values - lse),)

    return _emit("logsumexp", values, (a,), rule)


# ==================== INDEXING ====================

def slice_rows(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    if not 0 <= start <= stop <= a.shape[0]:
        raise ShapeError("slice_rows", a.shape, (start, stop))

    def rule(g):
        grad = np.zeros_like(a.values)
        grad[start:stop] = g
        return (grad,)

    return _emit("slice_rows", a.values[start:stop].copy(), (a,), rule)


def embedding_lookup(table, indices) -> Tensor:
    """Rows `table[indices]`; repeated indices accumulate their gradients."""
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ShapeError("embedding_lookup", table.shape, indices.shape)

    def rule(g):
        grad = np.zeros_like(table.values)
        np.add.at(grad, indices, g)
        return (grad,)

    return _emit("embedding_lookup", table.values[indices], (table,), rule)


# ==================== HELPERS ====================

def _broadcast_kind(op: str, a: Tensor, b: Tensor) -> str:
    if a.shape == b.shape:
        return "same"
    if b.values.ndim == 0 or b.values.size == 1 and b.values.ndim <= 1:
        return "scalar"
    if b.values.ndim == 1 and a.values.ndim == 2 and a.shape[1] == b.shape[0]:
        return "row"
    raise ShapeError(op, a.shape, b.shape)


def _reduce_to(g: np.ndarray, kind: str, shape) -> np.ndarray:
    if kind == "same":
        return g
    if kind == "row":
        return g.sum(axis=0)
    return np.asarray(g.sum()).reshape(shape)


def _expand(g, shape, axis) -> np.ndarray:
    g = np.asarray(g)
    if axis is None:
        return np.broadcast_to(g, shape).copy()
    return np.broadcast_to(np.expand_dims(g, axis), shape).copy()
