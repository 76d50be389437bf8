from .core import (
    GraphNeighbors,
    NonFiniteError,
    Tape,
    Tensor,
    active_tape,
    add,
    backward,
    concat,
    dropout,
    matmul,
    mse_loss,
    mul,
    neighbor_aggregate,
    relu,
    sigmoid,
    sub,
    tanh,
)
from .check import GradCheckReport, grad_check
from .rng import derive_seed, named_stream
from .snapshot import load_params, save_params

__all__ = [
    "GraphNeighbors", "NonFiniteError", "Tape", "Tensor", "active_tape",
    "add", "backward", "concat", "dropout", "matmul", "mse_loss", "mul",
    "neighbor_aggregate", "relu", "sigmoid", "sub", "tanh",
    "GradCheckReport", "grad_check", "derive_seed", "named_stream",
    "load_params", "save_params",
]
