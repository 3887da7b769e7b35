"""Reverse-mode automatic differentiation over numpy arrays.

Each op records its parents and a closure that accumulates gradients into
them; ``Tensor.backward`` walks the recorded graph in reverse topological
order. Everything is float64. The op set is exactly what the encoder/decoder
networks and their losses need, nothing more.
"""

from __future__ import annotations

import contextlib

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self) -> str:
        tag = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward requires a scalar loss node")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(astensor(other), -1.0))

    def __rsub__(self, other):
        return add(astensor(other), mul(self, -1.0))

    def __matmul__(self, other):
        return matmul(self, other)


def astensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: tuple[Tensor, ...]) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED:
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
    return out


def _accum(p: Tensor, g: np.ndarray) -> None:
    if not p.requires_grad:
        return
    if p.grad is None:
        p.grad = np.zeros_like(p.data)
    p.grad += g


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
    a, b = astensor(a), astensor(b)
    out = _node(a.data + b.data, (a, b))
    if out.requires_grad:

        def backward(g):
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(g, b.data.shape))

        out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    out = _node(a.data * b.data, (a, b))
    if out.requires_grad:

        def backward(g):
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

        out._backward = backward
    return out


def matmul(a, b) -> Tensor:
    """a @ b for a 2-D or 3-D left operand and a 2-D right operand."""
    a, b = astensor(a), astensor(b)
    if b.data.ndim != 2 or a.data.ndim not in (2, 3):
        raise ValueError(f"unsupported matmul shapes {a.data.shape} @ {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.data.shape} @ {b.data.shape}")
    out = _node(a.data @ b.data, (a, b))
    if out.requires_grad:

        def backward(g):
            _accum(a, g @ b.data.T)
            if a.data.ndim == 2:
                _accum(b, a.data.T @ g)
            else:
                _accum(b, np.tensordot(a.data, g, axes=([0, 1], [0, 1])))

        out._backward = backward
    return out


def tanh(a) -> Tensor:
    a = astensor(a)
    y = np.tanh(a.data)
    out = _node(y, (a,))
    if out.requires_grad:
        out._backward = lambda g: _accum(a, g * (1.0 - y * y))
    return out


def sigmoid(a) -> Tensor:
    a = astensor(a)
    # stable two-sided form
    y = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                 np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
    out = _node(y, (a,))
    if out.requires_grad:
        out._backward = lambda g: _accum(a, g * y * (1.0 - y))
    return out


def relu(a) -> Tensor:
    a = astensor(a)
    out = _node(np.maximum(a.data, 0.0), (a,))
    if out.requires_grad:
        out._backward = lambda g: _accum(a, g * (a.data > 0))
    return out


def exp(a) -> Tensor:
    a = astensor(a)
    y = np.exp(a.data)
    out = _node(y, (a,))
    if out.requires_grad:
        out._backward = lambda g: _accum(a, g * y)
    return out


def log(a) -> Tensor:
    a = astensor(a)
    out = _node(np.log(a.data), (a,))
    if out.requires_grad:
        out._backward = lambda g: _accum(a, g / a.data)
    return out


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = astensor(a)
    out = _node(a.data.sum(axis=axis, keepdims=keepdims), (a,))
    if out.requires_grad:

        def backward(g):
            if axis is None:
                _accum(a, np.broadcast_to(g, a.data.shape).copy())
                return
            if not keepdims:
                axes = axis if isinstance(axis, tuple) else (axis,)
                g = np.expand_dims(g, axes)
            _accum(a, np.broadcast_to(g, a.data.shape).copy())

        out._backward = backward
    return out


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = astensor(a)
    n = a.data.size if axis is None else (
        np.prod([a.data.shape[i] for i in (axis if isinstance(axis, tuple) else (axis,))])
    )
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def reshape(a, shape) -> Tensor:
    a = astensor(a)
    out = _node(a.data.reshape(shape), (a,))
    if out.requires_grad:
        out._backward = lambda g: _accum(a, g.reshape(a.data.shape))
    return out


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [astensor(t) for t in tensors]
    out = _node(np.stack([t.data for t in tensors], axis=axis), tuple(tensors))
    if out.requires_grad:

        def backward(g):
            pieces = np.moveaxis(g, axis, 0)
            for t, piece in zip(tensors, pieces):
                _accum(t, piece)

        out._backward = backward
    return out


def conv1d(x, w, b) -> Tensor:
    """Valid 1-D convolution over time: x (B,T,Cin), w (width,Cin,Cout), b (Cout,)."""
    x, w, b = astensor(x), astensor(w), astensor(b)
    B, T, cin = x.data.shape
    width, wcin, cout = w.data.shape
    if wcin != cin:
        raise ValueError(f"channel mismatch: input {cin}, kernel {wcin}")
    if T < width:
        raise ValueError(f"kernel width {width} exceeds sequence length {T}")
    tout = T - width + 1
    y = np.zeros((B, tout, cout))
    for d in range(width):
        y += x.data[:, d:d + tout, :] @ w.data[d]
    y += b.data
    out = _node(y, (x, w, b))
    if out.requires_grad:

        def backward(g):
            if x.requires_grad:
                gx = np.zeros_like(x.data)
                for d in range(width):
                    gx[:, d:d + tout, :] += g @ w.data[d].T
                _accum(x, gx)
            if w.requires_grad:
                gw = np.empty_like(w.data)
                for d in range(width):
                    gw[d] = np.tensordot(
                        x.data[:, d:d + tout, :], g, axes=([0, 1], [0, 1])
                    )
                _accum(w, gw)
            _accum(b, g.sum(axis=(0, 1)))

        out._backward = backward
    return out


def take_per_row(a, idx: np.ndarray) -> Tensor:
    """Gather a[..., idx] along the last axis with one index per row."""
    a = astensor(a)
    idx = np.asarray(idx)
    taken = np.take_along_axis(a.data, idx[..., None], axis=-1)[..., 0]
    out = _node(taken, (a,))
    if out.requires_grad:

        def backward(g):
            ga = np.zeros_like(a.data)
            np.put_along_axis(ga, idx[..., None], g[..., None], axis=-1)
            _accum(a, ga)

        out._backward = backward
    return out


def masked_logsumexp(a, mask: np.ndarray) -> Tensor:
    """log sum exp over the last axis restricted to mask; masked entries ignored.

    mask is a constant boolean array broadcastable to a's shape with at least
    one True per row.
    """
    a = astensor(a)
    m = np.broadcast_to(np.asarray(mask, dtype=bool), a.data.shape)
    if not m.any(axis=-1).all():
        raise ValueError("mask row with no unmasked entry")
    neg = np.where(m, a.data, -np.inf)
    hi = neg.max(axis=-1, keepdims=True)
    w = np.where(m, np.exp(a.data - hi), 0.0)
    s = w.sum(axis=-1, keepdims=True)
    out_data = (np.log(s) + hi)[..., 0]
    out = _node(out_data, (a,))
    if out.requires_grad:
        soft = w / s

        def backward(g):
            _accum(a, g[..., None] * soft)

        out._backward = backward
    return out
