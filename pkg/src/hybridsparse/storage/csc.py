"""Compressed sparse column storage.

Three parallel arrays: ``values`` and ``rows`` hold the nonzeros column by
column (rows ascending within a column), ``col_offsets[j]`` is the position of
the first element of column ``j``.  ``values``/``rows`` may be longer than
``n_nonzero``; the tail is spare capacity.
"""

from __future__ import annotations

from typing import Iterator

import numba as nb
import numpy as np

from .._instrument import counters
from ..errors import BoundsError, InvariantError

CHUNK = 1024
INDEX = np.int64


class CscStorage:
    __slots__ = ("n_rows", "n_cols", "values", "rows", "col_offsets", "n_nonzero")

    def __init__(self, n_rows, n_cols, values, rows, col_offsets, n_nonzero):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.values = values
        self.rows = rows
        self.col_offsets = col_offsets
        self.n_nonzero = int(n_nonzero)
        counters.matrix_allocs += 1

    @classmethod
    def empty(cls, n_rows, n_cols, capacity=0, dtype=np.float64):
        return cls(
            n_rows,
            n_cols,
            np.zeros(capacity, dtype=dtype),
            np.zeros(capacity, dtype=INDEX),
            np.zeros(int(n_cols) + 1, dtype=INDEX),
            0,
        )

    @classmethod
    def from_arrays(cls, n_rows, n_cols, values, rows, col_offsets):
        """Copy caller arrays into a new storage and audit the result."""
        values = np.array(values, dtype=np.float64)
        out = cls(
            n_rows,
            n_cols,
            values,
            np.array(rows, dtype=INDEX),
            np.array(col_offsets, dtype=INDEX),
            len(values),
        )
        csc_audit(out)
        return out

    @property
    def capacity(self) -> int:
        return len(self.values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def dtype(self):
        return self.values.dtype

    def data(self):
        """Return ``(values, rows, col_offsets)`` trimmed to ``n_nonzero``."""
        n = self.n_nonzero
        return self.values[:n], self.rows[:n], self.col_offsets

    def copy(self) -> "CscStorage":
        v, r, c = self.data()
        return CscStorage(self.n_rows, self.n_cols, v.copy(), r.copy(), c.copy(), self.n_nonzero)

    def __repr__(self):
        return (
            f"CscStorage({self.n_rows}x{self.n_cols}, n_nonzero={self.n_nonzero}, "
            f"capacity={self.capacity})"
        )


@nb.njit(cache=True)
def _find(rows, col_offsets, row, col):
    lo = col_offsets[col]
    hi = col_offsets[col + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        r = rows[mid]
        if r < row:
            lo = mid + 1
        elif r > row:
            hi = mid
        else:
            return mid
    return -1


@nb.njit(cache=True)
def _lower_bound(rows, lo, hi, row):
    while lo < hi:
        mid = (lo + hi) >> 1
        if rows[mid] < row:
            lo = mid + 1
        else:
            hi = mid
    return lo


@nb.njit(cache=True)
def _insert(values, rows, col_offsets, nnz, row, col, value):
    n_cols = col_offsets.shape[0] - 1
    start = col_offsets[col]
    end = col_offsets[col + 1]
    pos = _lower_bound(rows, start, end, row)
    if pos < end and rows[pos] == row:
        if value != 0:
            values[pos] = value
            return values, rows, nnz
        for k in range(pos, nnz - 1):
            values[k] = values[k + 1]
            rows[k] = rows[k + 1]
        for j in range(col + 1, n_cols + 1):
            col_offsets[j] -= 1
        return values, rows, nnz - 1
    if value == 0:
        return values, rows, nnz
    if nnz == values.shape[0]:
        new_values = np.zeros(values.shape[0] + CHUNK, dtype=values.dtype)
        new_rows = np.zeros(values.shape[0] + CHUNK, dtype=rows.dtype)
        new_values[:nnz] = values[:nnz]
        new_rows[:nnz] = rows[:nnz]
        values = new_values
        rows = new_rows
    for k in range(nnz, pos, -1):
        values[k] = values[k - 1]
        rows[k] = rows[k - 1]
    values[pos] = value
    rows[pos] = row
    for j in range(col + 1, n_cols + 1):
        col_offsets[j] += 1
    return values, rows, nnz + 1


@nb.njit(cache=True)
def _insert_many(values, rows, col_offsets, nnz, in_rows, in_cols, in_values):
    for i in range(in_rows.shape[0]):
        values, rows, nnz = _insert(
            values, rows, col_offsets, nnz, in_rows[i], in_cols[i], in_values[i]
        )
    return values, rows, nnz


def _check_bounds(csc, row, col):
    if not (0 <= row < csc.n_rows and 0 <= col < csc.n_cols):
        raise BoundsError(f"({row}, {col}) outside {csc.n_rows}x{csc.n_cols} matrix")


def csc_get(csc: CscStorage, row: int, col: int):
    """Stored value at ``(row, col)``, or zero; binary search within the column."""
    _check_bounds(csc, row, col)
    pos = _find(csc.rows, csc.col_offsets, row, col)
    if pos < 0:
        return csc.values.dtype.type(0)
    return csc.values[pos]


def csc_insert(csc: CscStorage, row: int, col: int, value) -> CscStorage:
    """Insert, overwrite or (for ``value == 0``) remove one element in place.

    Later elements are shifted one slot; ``col_offsets`` past ``col`` are
    adjusted.  When the arrays are full they grow by ``CHUNK`` slots.
    """
    _check_bounds(csc, row, col)
    csc.values, csc.rows, csc.n_nonzero = _insert(
        csc.values, csc.rows, csc.col_offsets, csc.n_nonzero, row, col, value
    )
    return csc


def csc_insert_many(csc: CscStorage, rows, cols, values) -> CscStorage:
    """Element-by-element insertion of a batch (same semantics as repeated
    :func:`csc_insert`, without per-call interpreter overhead)."""
    rows = np.asarray(rows, dtype=INDEX)
    cols = np.asarray(cols, dtype=INDEX)
    values = np.asarray(values, dtype=csc.values.dtype)
    if len(rows) and (
        rows.min() < 0 or rows.max() >= csc.n_rows or cols.min() < 0 or cols.max() >= csc.n_cols
    ):
        raise BoundsError(f"batch has indices outside {csc.n_rows}x{csc.n_cols} matrix")
    csc.values, csc.rows, csc.n_nonzero = _insert_many(
        csc.values, csc.rows, csc.col_offsets, csc.n_nonzero, rows, cols, values
    )
    return csc


def csc_columns(csc: CscStorage) -> np.ndarray:
    """Column index of every stored element, in storage order."""
    counts = np.diff(csc.col_offsets)
    return np.repeat(np.arange(csc.n_cols, dtype=INDEX), counts)


def csc_iter(csc: CscStorage) -> Iterator[tuple]:
    v, r, _ = csc.data()
    return zip(r.tolist(), csc_columns(csc).tolist(), v.tolist())


def csc_audit(csc: CscStorage) -> None:
    """Raise :class:`InvariantError` if any structural invariant is broken."""
    c = csc.col_offsets
    n = csc.n_nonzero
    if len(c) != csc.n_cols + 1:
        raise InvariantError("col_offsets must have n_cols + 1 entries")
    if c[0] != 0 or c[-1] != n:
        raise InvariantError(f"col_offsets must run from 0 to N={n}, got {c[0]}..{c[-1]}")
    if np.any(np.diff(c) < 0):
        raise InvariantError("col_offsets is not monotone")
    if len(csc.rows) != len(csc.values) or n > len(csc.values):
        raise InvariantError("values/rows length mismatch")
    v, r, _ = csc.data()
    if n and (r.min() < 0 or r.max() >= csc.n_rows):
        raise InvariantError("row index out of range")
    if np.any(v == 0):
        raise InvariantError("explicit zero stored")
    if n > 1:
        same_col = csc_columns(csc)
        step = np.diff(r)
        inside = same_col[1:] == same_col[:-1]
        if np.any(step[inside] <= 0):
            raise InvariantError("rows not strictly increasing within a column")
