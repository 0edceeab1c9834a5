"""Dense numerical kernel with reverse-mode differentiation.

The hot primitives exist twice: compiled Cython kernels and a numpy fallback,
selected at import (QVTAD_KERNELS=py|cy overrides). See backend.py.
"""

from .backend import K, available_backends, backend_name, select_backend
from .gradcheck import grad_check
from .tensor import (
    BatchNormState,
    Tape,
    Tensor2,
    add,
    affine,
    backward,
    batch_stat_norm,
    bce,
    concat_cols,
    concat_rows,
    dropout,
    l2_norm,
    matmul,
    mul_colvec,
    rms_norm,
    row,
    row_softmax,
    rowsum_mul,
    scale,
    sigmoid,
    slice_cols,
    sub,
    take_per_row,
    tanh,
    transpose,
)

__all__ = [
    "BatchNormState", "Tape", "Tensor2", "add", "affine", "available_backends",
    "backend_name", "backward", "batch_stat_norm", "bce", "concat_cols",
    "concat_rows", "dropout", "grad_check", "K", "l2_norm", "matmul",
    "mul_colvec", "rms_norm", "row", "row_softmax", "rowsum_mul", "scale", "select_backend",
    "sigmoid", "slice_cols", "sub", "take_per_row", "tanh", "transpose",
]
