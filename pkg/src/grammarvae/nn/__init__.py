"""Minimal differentiable-network substrate."""

from .gradcheck import gradient_check
from .layers import Conv1d, Dense, GRUCell
from .optim import Adam, NonFiniteGradientError
from .serialize import SerializationError, load_tensors, save_tensors
from .tensor import (
    Tensor,
    add,
    astensor,
    conv1d,
    exp,
    log,
    masked_logsumexp,
    matmul,
    mean,
    mul,
    no_grad,
    relu,
    reshape,
    sigmoid,
    stack,
    sum_,
    take_per_row,
    tanh,
)

__all__ = [
    "Adam",
    "Conv1d",
    "Dense",
    "GRUCell",
    "NonFiniteGradientError",
    "SerializationError",
    "Tensor",
    "add",
    "astensor",
    "conv1d",
    "exp",
    "gradient_check",
    "load_tensors",
    "log",
    "masked_logsumexp",
    "matmul",
    "mean",
    "mul",
    "no_grad",
    "relu",
    "reshape",
    "save_tensors",
    "sigmoid",
    "stack",
    "sum_",
    "take_per_row",
    "tanh",
]
