"""Small define-by-run reverse-mode autodiff engine with Adam and weight clipping.

Tensors wrap float64 numpy arrays. Operations executed while a :class:`Graph`
is active (``with Graph() as g:``) are recorded on that graph's tape whenever
at least one input needs a gradient; outside a graph they just compute values.
The tape is append-only, so its order is already topological.

Broadcasting is limited to what the networks need: an operand may omit leading
axes (a bias vector added to a batch) or be a scalar.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, ShapeError, TrainingError

__all__ = [
    "Tensor", "Graph", "Node", "AdamState",
    "constant", "parameter", "no_grad",
    "add", "subtract", "multiply", "matvec", "concat", "slice_last", "take",
    "tanh", "sigmoid", "softplus", "leaky_relu", "square", "sqrt", "absolute",
    "sum", "mean", "backward", "adam_step", "clip_weights",
]

LEAKY_SLOPE = 0.2
DIFFUSION_FLOOR = 1e-6

_local = threading.local()


def _graph_stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def current_graph() -> "Graph | None":
    stack = _graph_stack()
    return stack[-1] if stack else None


class Tensor:
    """An n-d float64 array that may participate in a recorded graph."""

    __slots__ = ("value", "grad", "trainable", "name", "needs_grad", "__weakref__")

    def __init__(self, value, trainable: bool = False, name: str | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.trainable = trainable
        self.needs_grad = trainable
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the values."""
        return self.value.reshape(-1)

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(other, self)

    def __neg__(self):
        return multiply(self, -1.0)


def constant(value) -> Tensor:
    return Tensor(value)


def parameter(value, name: str | None = None) -> Tensor:
    """Trainable leaf. The array is wrapped without copying."""
    return Tensor(value, trainable=True, name=name)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class Node:
    kind: str
    input_ids: tuple[int | None, ...]
    out: Tensor
    vjp: Callable | None = None


class Graph:
    """Append-only tape of recorded operations.

    Use as a context manager; operations inside the block are recorded here.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._index: dict[int, int] = {}

    def __enter__(self) -> "Graph":
        _graph_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _graph_stack().pop()

    @property
    def order(self) -> list[int]:
        return list(range(len(self.nodes)))

    def _node_id(self, t: Tensor) -> int | None:
        if not t.needs_grad:
            return None
        key = id(t)
        idx = self._index.get(key)
        if idx is None:
            # first sighting of a trainable leaf
            idx = len(self.nodes)
            self.nodes.append(Node("leaf", (), t))
            self._index[key] = idx
        return idx

    def _append(self, kind: str, inputs: Sequence[Tensor], out: Tensor, vjp: Callable) -> None:
        ids = tuple(self._node_id(t) for t in inputs)
        self._index[id(out)] = len(self.nodes)
        self.nodes.append(Node(kind, ids, out, vjp))

    def backward(self, output: Tensor) -> dict[str, np.ndarray]:
        """Populate ``.grad`` on every trainable leaf reached from ``output``.

        Returns a name -> gradient mapping (unnamed leaves get ``leaf<id>``).
        """
        if output.shape != ():
            raise ContractError(f"backward needs a scalar output, got shape {output.shape}")
        idx = self._index.get(id(output))
        if idx is None:
            return {}
        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[idx] = np.ones(())
        result: dict[str, np.ndarray] = {}
        for i in range(idx, -1, -1):
            g = grads[i]
            if g is None:
                continue
            grads[i] = None
            node = self.nodes[i]
            if node.kind == "leaf":
                node.out.grad = np.array(g, dtype=np.float64).reshape(node.out.shape)
                result[node.out.name or f"leaf{i}"] = node.out.grad
                continue
            for j, gj in zip(node.input_ids, node.vjp(g)):
                if j is None or gj is None:
                    continue
                grads[j] = gj if grads[j] is None else grads[j] + gj
        return result


class no_grad:
    """Suspend recording inside an active graph."""

    def __enter__(self):
        _graph_stack().append(None)

    def __exit__(self, *exc):
        _graph_stack().pop()


def backward(output: Tensor, graph: Graph | None = None) -> dict[str, np.ndarray]:
    graph = graph or current_graph()
    if graph is None:
        raise ContractError("backward called with no active graph")
    return graph.backward(output)


def _emit(kind: str, inputs: Sequence[Tensor], value: np.ndarray, vjp: Callable) -> Tensor:
    out = Tensor(value)
    stack = getattr(_local, "stack", None)
    graph = stack[-1] if stack else None
    if graph is not None and any(t.needs_grad for t in inputs):
        out.needs_grad = True
        graph._append(kind, inputs, out, vjp)
    return out


# ---------------------------------------------------------------------------
# elementwise binary ops

def _broadcast_shape(kind: str, a: Tensor, b: Tensor) -> None:
    sa, sb = a.value.shape, b.value.shape
    if sa == sb or not sb or not sa:
        return
    if len(sa) > len(sb) and sa[len(sa) - len(sb):] == sb:
        return
    if len(sb) > len(sa) and sb[len(sb) - len(sa):] == sa:
        return
    try:
        np.broadcast_shapes(sa, sb)
    except ValueError:
        raise ShapeError(f"{kind}: cannot combine shapes {sa} and {sb}") from None


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return _emit("add", (a, b), a.value + b.value,
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def subtract(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("subtract", a, b)
    sa, sb = a.shape, b.shape
    return _emit("subtract", (a, b), a.value - b.value,
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def multiply(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("multiply", a, b)
    av, bv = a.value, b.value

    def vjp(g):
        return (_unbroadcast(g * bv, av.shape) if a.needs_grad else None,
                _unbroadcast(g * av, bv.shape) if b.needs_grad else None)

    return _emit("multiply", (a, b), av * bv, vjp)


# ---------------------------------------------------------------------------
# linear algebra and structure

def matvec(w, x) -> Tensor:
    """``W @ x`` for a matrix ``W`` of shape (m, n) and a batch of vectors ``x`` (..., n)."""
    w, x = _as_tensor(w), _as_tensor(x)
    if w.value.ndim != 2 or x.value.ndim < 1 or x.shape[-1] != w.shape[1]:
        raise ShapeError(f"matvec: cannot apply matrix {w.shape} to vector {x.shape}")
    wv, xv = w.value, x.value
    m, n = wv.shape

    def vjp(g):
        gw = g.reshape(-1, m).T @ xv.reshape(-1, n) if w.needs_grad else None
        gx = g @ wv if x.needs_grad else None
        return gw, gx

    return _emit("matvec", (w, x), xv @ wv.T, vjp)


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    if not ts:
        raise ShapeError("concat: no inputs")
    nd = ts[0].value.ndim
    ax = axis % nd if nd else 0
    for t in ts[1:]:
        if t.value.ndim != nd or any(
            s != r for k, (s, r) in enumerate(zip(t.shape, ts[0].shape)) if k != ax
        ):
            raise ShapeError(f"concat: cannot join shapes {ts[0].shape} and {t.shape}")
    bounds = np.cumsum([0] + [t.shape[ax] for t in ts])

    def vjp(g):
        return tuple(np.take(g, np.arange(bounds[k], bounds[k + 1]), axis=ax)
                     for k in range(len(ts)))

    return _emit("concat", ts, np.concatenate([t.value for t in ts], axis=ax), vjp)


def slice_last(x, start: int, stop: int) -> Tensor:
    """Contiguous slice ``x[..., start:stop]``."""
    x = _as_tensor(x)
    n = x.shape[-1]
    if not 0 <= start < stop <= n:
        raise ShapeError(f"slice_last: range [{start}, {stop}) outside last axis of {x.shape}")
    shape = x.shape

    def vjp(g):
        out = np.zeros(shape)
        out[..., start:stop] = g
        return (out,)

    return _emit("slice", (x,), x.value[..., start:stop], vjp)


def take(x, indices) -> Tensor:
    """Gather along the last axis; repeated indices accumulate in the backward pass."""
    x = _as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)
    n = x.shape[-1]
    if idx.ndim != 1 or (idx.size and (idx.min() < 0 or idx.max() >= n)):
        raise ShapeError(f"take: indices out of range for shape {x.shape}")

    def vjp(g):
        onehot = np.zeros((idx.size, n))
        onehot[np.arange(idx.size), idx] = 1.0
        return (g @ onehot,)

    return _emit("take", (x,), x.value[..., idx], vjp)


# ---------------------------------------------------------------------------
# elementwise unary ops

def tanh(x) -> Tensor:
    x = _as_tensor(x)
    y = np.tanh(x.value)
    return _emit("tanh", (x,), y, lambda g: (g * (1.0 - y * y),))


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    y = 0.5 * (1.0 + np.tanh(0.5 * x.value))
    return _emit("sigmoid", (x,), y, lambda g: (g * y * (1.0 - y),))


def softplus(x, scale: float = 1.0, floor: float | None = None) -> Tensor:
    """``max(scale * log(1 + exp(x)), floor)``; gradient is zero where the floor binds."""
    x = _as_tensor(x)
    y = scale * np.logaddexp(0.0, x.value)
    slope = scale * 0.5 * (1.0 + np.tanh(0.5 * x.value))
    if floor is not None:
        below = y < floor
        y = np.where(below, floor, y)
        slope = np.where(below, 0.0, slope)
    return _emit("softplus", (x,), y, lambda g: (g * slope,))


def leaky_relu(x, slope: float = LEAKY_SLOPE) -> Tensor:
    x = _as_tensor(x)
    d = np.where(x.value > 0, 1.0, slope)
    return _emit("leaky_relu", (x,), x.value * d, lambda g: (g * d,))


def square(x) -> Tensor:
    x = _as_tensor(x)
    xv = x.value
    return _emit("square", (x,), xv * xv, lambda g: (2.0 * g * xv,))


def sqrt(x) -> Tensor:
    x = _as_tensor(x)
    if np.any(x.value < 0):
        raise ContractError("sqrt of a negative value")
    y = np.sqrt(x.value)
    return _emit("sqrt", (x,), y, lambda g: (0.5 * g / np.maximum(y, 1e-150),))


def absolute(x) -> Tensor:
    x = _as_tensor(x)
    s = np.sign(x.value)
    return _emit("abs", (x,), np.abs(x.value), lambda g: (g * s,))


def sum(x, axis: int | None = None) -> Tensor:  # noqa: A001 - mirrors numpy naming
    x = _as_tensor(x)
    shape = x.shape
    if axis is None:
        return _emit("sum", (x,), np.sum(x.value), lambda g: (np.broadcast_to(g, shape),))
    ax = axis % len(shape)
    return _emit("sum", (x,), np.sum(x.value, axis=ax),
                 lambda g: (np.broadcast_to(np.expand_dims(g, ax), shape),))


def mean(x) -> Tensor:
    x = _as_tensor(x)
    shape, size = x.shape, x.value.size
    return _emit("mean", (x,), np.mean(x.value),
                 lambda g: (np.broadcast_to(g / size, shape),))


# ---------------------------------------------------------------------------
# optimisation

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **hyper) -> "AdamState":
        return cls(m={k: np.zeros_like(p) for k, p in params.items()},
                   v={k: np.zeros_like(p) for k, p in params.items()}, **hyper)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> dict[str, np.ndarray]:
    """Bias-corrected Adam update applied in place. Missing gradients count as zero."""
    for name, g in grads.items():
        if name not in params:
            continue
        if g.shape != params[name].shape:
            raise ShapeError(f"adam: gradient {g.shape} does not match parameter {name} {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}", component=name)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads.get(name)
        m, v = state.m[name], state.v[name]
        if m.shape != p.shape:
            raise ShapeError(f"adam: moment buffer {m.shape} does not match parameter {name} {p.shape}")
        if g is None:
            g = np.zeros_like(p)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def clip_weights(params, c: float):
    """Clamp every entry into [-c, c] in place; accepts one array or a name -> array dict."""
    if not c > 0:
        raise ContractError(f"clip bound must be positive, got {c}")
    arrays = params.values() if isinstance(params, dict) else [params]
    for p in arrays:
        np.clip(p, -c, c, out=p)
    return params
