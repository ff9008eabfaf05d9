"""Dense float64 tensors with reverse-mode automatic differentiation.

Small computation graphs only: every model in this package is an MLP or a
short GRU, so clarity and determinism win over throughput. All data is
float64; leaf gradients accumulate additively until cleared.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "no_grad",
    "grad_enabled",
    "add", "sub", "mul", "neg", "matmul",
    "tanh", "sigmoid", "relu", "exp", "log", "square",
    "clamp", "minimum",
    "tsum", "tmean", "softmax", "log_softmax", "gather_rows",
    "backward",
]


class _GradMode:
    enabled = True


class no_grad:
    """Context manager that disables graph recording (used during rollouts)."""

    def __enter__(self):
        self._prev = _GradMode.enabled
        _GradMode.enabled = False
        return self

    def __exit__(self, *exc):
        _GradMode.enabled = self._prev
        return False


def grad_enabled() -> bool:
    return _GradMode.enabled


class Tensor:
    """A float64 array plus an optional recorded backward graph.

    Leaf tensors created with requires_grad=True receive gradients in .grad
    when backward() runs; interior nodes only route gradients.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._backward = None
        self._parents: tuple = ()

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accum(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the target shape."""
    g = np.asarray(g, dtype=np.float64)
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _make(data: np.ndarray, parents: tuple, bw) -> Tensor:
    """Wrap an op result; bw(g) returns per-parent gradients (None allowed)."""
    track = _GradMode.enabled and any(
        p.requires_grad or p._backward is not None for p in parents
    )
    out = Tensor(data, requires_grad=track)
    if track:
        out._parents = parents
        out._backward = bw
    return out


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _make(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _make(-a.data, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    A, B = a.data, b.data
    if A.shape[-1] != B.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {A.shape} @ {B.shape}")

    def bw(g):
        g_ = np.asarray(g, dtype=np.float64)
        if A.ndim == 1 and B.ndim == 1:
            return (g_ * B, g_ * A)
        if A.ndim == 1:
            return (B @ g_, np.outer(A, g_))
        if B.ndim == 1:
            return (np.outer(g_, B), A.T @ g_)
        return (g_ @ B.T, A.T @ g_)

    return _make(A @ B, (a, b), bw)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    data = np.tanh(a.data)
    return _make(data, (a,), lambda g: (g * (1.0 - data * data),))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    data = 1.0 / (1.0 + np.exp(-a.data))
    return _make(data, (a,), lambda g: (g * data * (1.0 - data),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0.0
    return _make(np.maximum(a.data, 0.0), (a,), lambda g: (g * mask,))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    data = np.exp(a.data)
    return _make(data, (a,), lambda g: (g * data,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    return _make(a.data * a.data, (a,), lambda g: (g * 2.0 * a.data,))


def clamp(a, lo: float, hi: float) -> Tensor:
    """Clip values; gradient is zero outside [lo, hi]."""
    a = _as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)
    return _make(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,))


def minimum(a, b) -> Tensor:
    """Elementwise min; the gradient flows to the smaller branch."""
    a, b = _as_tensor(a), _as_tensor(b)
    take_a = a.data <= b.data
    data = np.where(take_a, a.data, b.data)
    return _make(data, (a, b), lambda g: (g * take_a, g * ~take_a))


def tsum(a, axis: int | None = None) -> Tensor:
    a = _as_tensor(a)
    data = a.data.sum(axis=axis)

    def bw(g):
        if axis is None:
            return (np.full(a.data.shape, g, dtype=np.float64),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy(),)

    return _make(data, (a,), bw)


def tmean(a) -> Tensor:
    a = _as_tensor(a)
    n = a.data.size
    return _make(
        a.data.mean(), (a,),
        lambda g: (np.full(a.data.shape, g / n, dtype=np.float64),),
    )


def softmax(a) -> Tensor:
    """Row-wise stable softmax over the last axis. Strictly positive, rows sum to 1."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        dot = (g * data).sum(axis=-1, keepdims=True)
        return (data * (g - dot),)

    return _make(data, (a,), bw)


def log_softmax(a) -> Tensor:
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    data = shifted - lse
    p = np.exp(data)

    def bw(g):
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return _make(data, (a,), bw)


def gather_rows(a, index) -> Tensor:
    """Pick one column per row: out[i] = a[i, index[i]]."""
    a = _as_tensor(a)
    index = np.asarray(index, dtype=np.intp)
    rows = np.arange(a.data.shape[0])
    data = a.data[rows, index]

    def bw(g):
        full = np.zeros_like(a.data)
        np.add.at(full, (rows, index), g)
        return (full,)

    return _make(data, (a,), bw)


def backward(loss: Tensor):
    """Populate .grad on every requires_grad leaf reachable from a scalar loss.

    Leaf gradients accumulate additively across calls: running backward twice
    without zeroing doubles each gradient exactly. The graph is retained.
    """
    if loss.data.ndim != 0:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    if not (loss.requires_grad or loss._backward is not None):
        return

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))

    flow: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float64)}
    for node in reversed(topo):
        g = flow.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                node._accum(_unbroadcast(g, node.data.shape))
            continue
        for p, gp in zip(node._parents, node._backward(g)):
            if gp is None:
                continue
            if not (p.requires_grad or p._backward is not None):
                continue
            gp = _unbroadcast(gp, p.data.shape)
            key = id(p)
            if key in flow:
                flow[key] = flow[key] + gp
            else:
                flow[key] = gp
