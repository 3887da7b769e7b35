"""Network layers: dense, 1-D convolution, GRU cell.

Weights use uniform fan-in initialization, biases start at zero. Every
parameter tensor carries a dotted name so optimizer errors and serialized
files can identify it.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor

_ACTIVATIONS = {
    "identity": lambda x: x,
    "relu": T.relu,
    "tanh": T.tanh,
    "sigmoid": T.sigmoid,
}


def _uniform(rng, fan_in: int, shape, name: str) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def _zeros(shape, name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


class Dense:
    def __init__(self, n_in: int, n_out: int, activation: str = "identity",
                 rng=None, name: str = "dense"):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.w = _uniform(rng, n_in, (n_in, n_out), f"{name}.w")
        self.b = _zeros((n_out,), f"{name}.b")
        self.activation = activation

    def __call__(self, x) -> Tensor:
        return _ACTIVATIONS[self.activation](T.add(T.matmul(x, self.w), self.b))

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class Conv1d:
    """Valid (no padding) convolution along the time axis."""

    def __init__(self, width: int, c_in: int, c_out: int, activation: str = "identity",
                 rng=None, name: str = "conv"):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.w = _uniform(rng, width * c_in, (width, c_in, c_out), f"{name}.w")
        self.b = _zeros((c_out,), f"{name}.b")
        self.width = width
        self.activation = activation

    def __call__(self, x) -> Tensor:
        return _ACTIVATIONS[self.activation](T.conv1d(x, self.w, self.b))

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class GRUCell:
    """Gated recurrent unit step.

    z = sigmoid(x Wz + h Uz + bz)        (update gate)
    r = sigmoid(x Wr + h Ur + br)        (reset gate)
    c = tanh(x Wh + (r * h) Uh + bh)     (candidate)
    h' = (1 - z) * h + z * c
    """

    def __init__(self, n_in: int, n_hidden: int, rng=None, name: str = "gru"):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_hidden = n_hidden
        mk_w = lambda tag: _uniform(rng, n_in, (n_in, n_hidden), f"{name}.w{tag}")
        mk_u = lambda tag: _uniform(rng, n_hidden, (n_hidden, n_hidden), f"{name}.u{tag}")
        self.wz, self.uz, self.bz = mk_w("z"), mk_u("z"), _zeros((n_hidden,), f"{name}.bz")
        self.wr, self.ur, self.br = mk_w("r"), mk_u("r"), _zeros((n_hidden,), f"{name}.br")
        self.wh, self.uh, self.bh = mk_w("h"), mk_u("h"), _zeros((n_hidden,), f"{name}.bh")

    def step(self, h_prev, x_t) -> Tensor:
        z = T.sigmoid(T.add(T.add(T.matmul(x_t, self.wz), T.matmul(h_prev, self.uz)), self.bz))
        r = T.sigmoid(T.add(T.add(T.matmul(x_t, self.wr), T.matmul(h_prev, self.ur)), self.br))
        c = T.tanh(T.add(T.add(T.matmul(x_t, self.wh),
                               T.matmul(T.mul(r, h_prev), self.uh)), self.bh))
        one_minus_z = T.add(T.mul(z, -1.0), 1.0)
        return T.add(T.mul(one_minus_z, h_prev), T.mul(z, c))

    def parameters(self) -> list[Tensor]:
        return [self.wz, self.uz, self.bz, self.wr, self.ur, self.br,
                self.wh, self.uh, self.bh]
