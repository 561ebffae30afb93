"""Dense float64 tensors with reverse-mode automatic differentiation.

The engine is a dynamic tape: while a :class:`Graph` is active, every
operation appends one node to it, and ``backward`` replays the tape in
reverse insertion order exactly once. Outside a graph, operations compute
forward values only (inference mode). Everything is float64 and the graph
is rebuilt from scratch on every forward pass; both choices trade speed
for gradient-check fidelity at desk scale.

Parameter checkpoints are JSON: a versioned map of parameter name to
shape plus the flat row-major float array (see ``save_params``).
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CompatibilityError, ContractError, DimensionError

CHECKPOINT_FORMAT = "trendcast-params"
CHECKPOINT_VERSION = 1

_GRAPH_STACK: list["Graph"] = []


def _active_graph() -> "Graph | None":
    return _GRAPH_STACK[-1] if _GRAPH_STACK else None


class Graph:
    """Tape of operation nodes in insertion order.

    Insertion order is a valid topological order because an operation can
    only consume tensors that already exist. Use as a context manager
    around one forward pass; ``backward`` on the resulting loss consumes
    the recorded nodes in reverse.
    """

    def __init__(self) -> None:
        self.nodes: list[Tensor] = []

    def __enter__(self) -> "Graph":
        _GRAPH_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _GRAPH_STACK.pop()


class Tensor:
    """n-dimensional float64 array, optionally tracked for gradients.

    ``trainable`` marks leaf parameters: they are created with a zero
    gradient buffer and ``backward`` accumulates into it. Intermediate
    tensors get gradient buffers lazily during the backward sweep.
    """

    __slots__ = ("data", "grad", "trainable", "name", "_parents", "_backprop")

    def __init__(self, data, trainable: bool = False, name: str | None = None):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        self.data = arr
        self.trainable = trainable
        self.name = name
        self.grad: np.ndarray | None = np.zeros_like(arr) if trainable else None
        self._parents: tuple[Tensor, ...] = ()
        self._backprop: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    # operator sugar; scalars are treated as constants
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def parameter(data, name: str) -> Tensor:
    """Trainable leaf tensor."""
    return Tensor(data, trainable=True, name=name)


def constant(data, name: str | None = None) -> Tensor:
    """Non-trainable leaf tensor."""
    return Tensor(data, trainable=False, name=name)


def _tracked(*inputs: Tensor) -> bool:
    """True when the output must participate in the active graph."""
    if _active_graph() is None:
        return False
    return any(t.trainable or t._parents for t in inputs)


def _record(out: Tensor, parents: tuple[Tensor, ...],
            backprop: Callable[[np.ndarray], None]) -> Tensor:
    if _tracked(*parents):
        out._parents = parents
        out._backprop = backprop
        _active_graph().nodes.append(out)
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not (t.trainable or t._parents):
        return   # plain constant: gradient is never read
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out dimensions that numpy broadcasting introduced or expanded."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def backward(loss: Tensor) -> None:
    """Populate gradients of every tensor the scalar ``loss`` depends on.

    Visits each recorded node exactly once, in reverse insertion order.
    Trainable leaves the loss does not depend on keep their zero buffer.
    """
    if loss.size != 1:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
    graph = _active_graph()
    if graph is None:
        raise ContractError("backward called with no active Graph")

    reachable: set[int] = set()
    stack = [loss]
    while stack:
        t = stack.pop()
        if id(t) in reachable:
            continue
        reachable.add(id(t))
        stack.extend(t._parents)

    if loss.grad is None:
        loss.grad = np.zeros_like(loss.data)
    loss.grad += 1.0

    for node in reversed(graph.nodes):
        if id(node) in reachable and node._backprop is not None and node.grad is not None:
            node._backprop(node.grad)


# ---------------------------------------------------------------------------
# operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy batch-dimension broadcasting."""
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise DimensionError(f"matmul needs >=2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    out = Tensor(np.matmul(a.data, b.data))

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        _accumulate(b, _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    return _record(out, (a, b), backprop)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = Tensor(a.data + b.data)
    except ValueError:
        raise DimensionError(f"add shapes not broadcastable: {a.shape} + {b.shape}") from None

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _record(out, (a, b), backprop)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = Tensor(a.data - b.data)
    except ValueError:
        raise DimensionError(f"sub shapes not broadcastable: {a.shape} - {b.shape}") from None

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(-g, b.shape))

    return _record(out, (a, b), backprop)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = Tensor(a.data * b.data)
    except ValueError:
        raise DimensionError(f"mul shapes not broadcastable: {a.shape} * {b.shape}") from None

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, _unbroadcast(g * b.data, a.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _record(out, (a, b), backprop)


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, g * c)

    return _record(out, (a,), backprop)


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0))

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, g * (a.data > 0.0))

    return _record(out, (a,), backprop)


def softmax(a: Tensor, axis: int) -> Tensor:
    """Softmax along ``axis`` with max-subtraction for stability."""
    if not -a.data.ndim <= axis < a.data.ndim:
        raise DimensionError(f"softmax axis {axis} invalid for shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)

    def backprop(g: np.ndarray) -> None:
        dot = (g * y).sum(axis=axis, keepdims=True)
        _accumulate(a, y * (g - dot))

    return _record(out, (a,), backprop)


def layer_norm(a: Tensor, axis: int = -1, eps: float = 1e-5) -> Tensor:
    """Normalize slices along ``axis`` to zero mean, unit variance."""
    mu = a.data.mean(axis=axis, keepdims=True)
    var = a.data.var(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    out = Tensor(xhat)

    def backprop(g: np.ndarray) -> None:
        gm = g.mean(axis=axis, keepdims=True)
        gx = (g * xhat).mean(axis=axis, keepdims=True)
        _accumulate(a, inv * (g - gm - xhat * gx))

    return _record(out, (a,), backprop)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    count = a.data.size if axis is None else np.prod(
        [a.data.shape[ax] for ax in np.atleast_1d(axis)])

    def backprop(g: np.ndarray) -> None:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape) / count)

    return _record(out, (a,), backprop)


def reduce_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def backprop(g: np.ndarray) -> None:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())

    return _record(out, (a,), backprop)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = list(tensors)
    if not parts:
        raise ContractError("concat of zero tensors")
    out = Tensor(np.concatenate([t.data for t in parts], axis=axis))
    sizes = [t.data.shape[axis] for t in parts]
    offsets = np.cumsum([0] + sizes)

    def backprop(g: np.ndarray) -> None:
        for t, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accumulate(t, g[tuple(idx)])

    return _record(out, tuple(parts), backprop)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor(a.data.reshape(shape))

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, g.reshape(a.data.shape))

    return _record(out, (a,), backprop)


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor(np.transpose(a.data, axes))

    def backprop(g: np.ndarray) -> None:
        _accumulate(a, np.transpose(g, inverse))

    return _record(out, (a,), backprop)


def take_rows(table: Tensor, indices) -> Tensor:
    """Row gather from a 2-d table; gradients scatter-add back."""
    idx = np.asarray(indices, dtype=np.intp)
    out = Tensor(table.data[idx])

    def backprop(g: np.ndarray) -> None:
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    return _record(out, (table,), backprop)


# ---------------------------------------------------------------------------
# parameter checkpoint i/o


def save_params(params: dict[str, Tensor], path) -> None:
    """Write parameters as versioned JSON, deterministically serialized."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "params": {
            name: {"shape": list(t.data.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, separators=(",", ":"))


def load_params(path) -> dict[str, np.ndarray]:
    """Read a checkpoint written by :func:`save_params`."""
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CompatibilityError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CompatibilityError(f"{path}: unsupported version {payload.get('version')}")
    out: dict[str, np.ndarray] = {}
    for name, entry in payload["params"].items():
        shape = tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if int(np.prod(shape)) != data.size:
            raise CompatibilityError(f"{path}: parameter {name} has {data.size} values "
                                     f"for shape {shape}")
        out[name] = data.reshape(shape)
    return out


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, one coordinate at a time."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g
