"""Sparse matrices with hybrid storage.

Elements are written into a red-black tree, algebra runs on compressed
sparse columns, and bulk coordinate transforms use a sorted coordinate list.
Conversions between the three happen automatically.
"""

from ._instrument import counters
from .errors import BoundsError, DimensionMismatch, InvariantError, SparseError
from .expr import diagmat, eval_diagmat, eval_trace, evaluate, transpose
from .hybrid import Format, ReadOnlyView, SpMat, speye, sprandu
from .io import load_matrix_market, save_matrix_market
from .kernels import (
    diag_extract,
    diagmat_fused_add,
    reverse,
    scalar_mul,
    sp_add,
    sp_mul,
    sum_dim,
    trace,
    trace_fused_atb,
    transpose_coo_oracle,
    transpose_csc,
    vec_mat_mul,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsError",
    "DimensionMismatch",
    "Format",
    "InvariantError",
    "ReadOnlyView",
    "SpMat",
    "SparseError",
    "counters",
    "diag_extract",
    "diagmat",
    "diagmat_fused_add",
    "eval_diagmat",
    "eval_trace",
    "evaluate",
    "load_matrix_market",
    "reverse",
    "save_matrix_market",
    "scalar_mul",
    "sp_add",
    "sp_mul",
    "speye",
    "sprandu",
    "sum_dim",
    "trace",
    "trace_fused_atb",
    "transpose",
    "transpose_coo_oracle",
    "transpose_csc",
    "vec_mat_mul",
]
