"""Coordinate-list storage: one ``(row, column, value)`` triple per nonzero.

Entries are kept sorted column-major (by column, then row).  The bulk
builders accept unordered input and canonicalise it.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numba as nb
import numpy as np

from .._instrument import counters
from ..errors import BoundsError, InvariantError
from .csc import CHUNK, INDEX


class CooStorage:
    __slots__ = ("n_rows", "n_cols", "values", "rows", "columns", "n_nonzero")

    def __init__(self, n_rows, n_cols, values, rows, columns, n_nonzero):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.values = values
        self.rows = rows
        self.columns = columns
        self.n_nonzero = int(n_nonzero)
        counters.matrix_allocs += 1

    @classmethod
    def empty(cls, n_rows, n_cols, capacity=0, dtype=np.float64):
        return cls(
            n_rows,
            n_cols,
            np.zeros(capacity, dtype=dtype),
            np.zeros(capacity, dtype=INDEX),
            np.zeros(capacity, dtype=INDEX),
            0,
        )

    @property
    def capacity(self) -> int:
        return len(self.values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def data(self):
        """Return ``(values, rows, columns)`` trimmed to ``n_nonzero``."""
        n = self.n_nonzero
        return self.values[:n], self.rows[:n], self.columns[:n]

    def copy(self) -> "CooStorage":
        v, r, c = self.data()
        return CooStorage(self.n_rows, self.n_cols, v.copy(), r.copy(), c.copy(), self.n_nonzero)

    def __repr__(self):
        return (
            f"CooStorage({self.n_rows}x{self.n_cols}, n_nonzero={self.n_nonzero}, "
            f"capacity={self.capacity})"
        )


@nb.njit(cache=True)
def _find(rows, columns, nnz, row, col):
    lo = 0
    hi = nnz
    while lo < hi:
        mid = (lo + hi) >> 1
        c = columns[mid]
        if c < col or (c == col and rows[mid] < row):
            lo = mid + 1
        else:
            hi = mid
    if lo < nnz and columns[lo] == col and rows[lo] == row:
        return lo
    return -1


@nb.njit(cache=True)
def _append_many(values, rows, columns, nnz, in_rows, in_cols, in_values):
    for i in range(in_rows.shape[0]):
        if nnz == values.shape[0]:
            cap = values.shape[0] + CHUNK
            nv = np.zeros(cap, dtype=values.dtype)
            nr = np.zeros(cap, dtype=rows.dtype)
            nc = np.zeros(cap, dtype=columns.dtype)
            nv[:nnz] = values[:nnz]
            nr[:nnz] = rows[:nnz]
            nc[:nnz] = columns[:nnz]
            values, rows, columns = nv, nr, nc
        values[nnz] = in_values[i]
        rows[nnz] = in_rows[i]
        columns[nnz] = in_cols[i]
        nnz += 1
    return values, rows, columns, nnz


@nb.njit(cache=True)
def _canonicalize(values, rows, columns, nnz, n_rows):
    # stable sort keeps input order among duplicates so the last one wins
    keys = columns[:nnz] * n_rows + rows[:nnz]
    order = np.argsort(keys, kind="mergesort")
    out_v = np.empty(nnz, dtype=values.dtype)
    out_r = np.empty(nnz, dtype=rows.dtype)
    out_c = np.empty(nnz, dtype=columns.dtype)
    k = 0
    for i in range(nnz):
        p = order[i]
        if i + 1 < nnz and keys[order[i + 1]] == keys[p]:
            continue
        v = values[p]
        if v == 0:
            continue
        out_v[k] = v
        out_r[k] = rows[p]
        out_c[k] = columns[p]
        k += 1
    return out_v[:k].copy(), out_r[:k].copy(), out_c[:k].copy(), k


def coo_append_many(coo: CooStorage, rows, cols, values) -> CooStorage:
    """Append a batch at the end of the arrays (growing in ``CHUNK`` steps).

    Ordering is not maintained; call :func:`coo_canonicalize` afterwards
    unless the batch is known to continue the column-major order.
    """
    rows = np.asarray(rows, dtype=INDEX)
    cols = np.asarray(cols, dtype=INDEX)
    values = np.asarray(values, dtype=coo.values.dtype)
    _check_batch(coo.n_rows, coo.n_cols, rows, cols, values)
    coo.values, coo.rows, coo.columns, coo.n_nonzero = _append_many(
        coo.values, coo.rows, coo.columns, coo.n_nonzero, rows, cols, values
    )
    return coo


def coo_canonicalize(coo: CooStorage) -> CooStorage:
    """Sort column-major in place, resolve duplicates (last wins), drop zeros."""
    coo.values, coo.rows, coo.columns, coo.n_nonzero = _canonicalize(
        coo.values, coo.rows, coo.columns, coo.n_nonzero, coo.n_rows
    )
    return coo


def _check_batch(n_rows, n_cols, rows, cols, values):
    if not (len(rows) == len(cols) == len(values)):
        raise ValueError("rows, cols and values must have equal length")
    bad = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise BoundsError(
            f"triplet #{i} ({rows[i]}, {cols[i]}, {values[i]}) outside {n_rows}x{n_cols} matrix"
        )


def coo_build_from_triplets(n_rows: int, n_cols: int, triplets: Iterable) -> CooStorage:
    """Build canonical COO storage from ``(row, col, value)`` triples in any order."""
    triplets = list(triplets)
    if triplets:
        r, c, v = zip(*triplets)
    else:
        r, c, v = (), (), ()
    rows = np.asarray(r, dtype=INDEX)
    cols = np.asarray(c, dtype=INDEX)
    values = np.asarray(v, dtype=np.float64)
    _check_batch(n_rows, n_cols, rows, cols, values)
    coo = CooStorage(n_rows, n_cols, values, rows, cols, len(values))
    return coo_canonicalize(coo)


def coo_get(coo: CooStorage, row: int, col: int):
    if not (0 <= row < coo.n_rows and 0 <= col < coo.n_cols):
        raise BoundsError(f"({row}, {col}) outside {coo.n_rows}x{coo.n_cols} matrix")
    pos = _find(coo.rows, coo.columns, coo.n_nonzero, row, col)
    if pos < 0:
        return coo.values.dtype.type(0)
    return coo.values[pos]


def coo_iter(coo: CooStorage) -> Iterator[tuple]:
    v, r, c = coo.data()
    return zip(r.tolist(), c.tolist(), v.tolist())


def coo_audit(coo: CooStorage) -> None:
    v, r, c = coo.data()
    n = coo.n_nonzero
    if not (len(coo.values) == len(coo.rows) == len(coo.columns)) or n > len(coo.values):
        raise InvariantError("array length mismatch")
    if n == 0:
        return
    if r.min() < 0 or r.max() >= coo.n_rows or c.min() < 0 or c.max() >= coo.n_cols:
        raise InvariantError("index out of range")
    if np.any(v == 0):
        raise InvariantError("explicit zero stored")
    keys = c * coo.n_rows + r
    if np.any(np.diff(keys) <= 0):
        raise InvariantError("entries not strictly column-major sorted")
