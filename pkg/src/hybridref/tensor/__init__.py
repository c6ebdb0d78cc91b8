"""Float64 tensors with tape-based reverse-mode differentiation."""

from hybridref.tensor.checkpoint import load_params, save_params
from hybridref.tensor.core import OpRecord, Tape, Tensor, active_tape, as_tensor
from hybridref.tensor.gradcheck import GradCheckReport, finite_difference_check
from hybridref.tensor.ops import (
    add,
    concat,
    dropout,
    exp,
    gather_rows,
    gelu,
    init_truncated_normal,
    layer_norm,
    log,
    log_softmax_last_dim,
    matmul,
    mul,
    neg,
    reduce_mean,
    reduce_sum,
    reshape,
    sigmoid,
    softmax_last_dim,
    softplus,
    sub,
    take_per_row,
    transpose,
)

__all__ = [
    "GradCheckReport",
    "OpRecord",
    "Tape",
    "Tensor",
    "active_tape",
    "add",
    "as_tensor",
    "concat",
    "dropout",
    "exp",
    "finite_difference_check",
    "gather_rows",
    "gelu",
    "init_truncated_normal",
    "layer_norm",
    "load_params",
    "log",
    "log_softmax_last_dim",
    "matmul",
    "mul",
    "neg",
    "reduce_mean",
    "reduce_sum",
    "reshape",
    "save_params",
    "sigmoid",
    "softmax_last_dim",
    "softplus",
    "sub",
    "take_per_row",
    "transpose",
]
