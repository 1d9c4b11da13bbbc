"""Conversions between the three storage formats.

All conversions are pure: the input stays valid and unmodified.  With
``DEBUG`` set (or ``HYBRIDSPARSE_DEBUG=1`` in the environment) every output
is fully audited before being returned.
"""

from __future__ import annotations

import os

import numba as nb
import numpy as np

from ._instrument import counters
from .storage.coo import CooStorage, coo_audit
from .storage.csc import CscStorage, csc_audit
from .storage.rbt import M_ROOT, NIL, STACK_DEPTH, RbtStorage, _insert, rbt_audit

DEBUG = os.environ.get("HYBRIDSPARSE_DEBUG", "") == "1"


@nb.njit(cache=True)
def _offsets_from_columns(columns, nnz, n_cols):
    col_offsets = np.zeros(n_cols + 1, dtype=np.int64)
    for i in range(nnz):
        j = columns[i] + 1
        col_offsets[j] += 1
    for j in range(1, n_cols + 1):
        col_offsets[j] += col_offsets[j - 1]
    return col_offsets


@nb.njit(cache=True)
def _columns_from_offsets(col_offsets, nnz, n_cols):
    columns = np.empty(nnz, dtype=np.int64)
    k = 0
    for j in range(n_cols):
        m = col_offsets[j + 1] - col_offsets[j]
        for l in range(m):
            columns[k + l] = j
        k += m
    return columns, k


@nb.njit(cache=True)
def _csc_to_tree(pool, red, meta, stack, values, rows, col_offsets, n_rows, n_cols):
    for j in range(n_cols):
        for k in range(col_offsets[j], col_offsets[j + 1]):
            index = rows[k] + j * n_rows
            pool, red = _insert(pool, red, meta, stack, index, values[k])
    return pool, red


@nb.njit(cache=True)
def _tree_to_csc(pool, root, values, n_rows, n_cols):
    n = values.shape[0]
    rows = np.empty(n, dtype=np.int64)
    col_offsets = np.zeros(n_cols + 1, dtype=np.int64)
    visits = 0
    if n == 0:
        return values, rows, col_offsets, visits
    stack = np.empty(STACK_DEPTH, dtype=np.int64)
    sp = 0
    k = 0
    # keys arrive in increasing order, so the column is tracked incrementally
    # instead of dividing: column j covers indices [col_end - n_rows, col_end).
    # The per-column count lives in a register and is stored when the column
    # changes.
    j = 0
    col_end = n_rows
    count = 0
    x = root
    while True:
        left = pool[x].left
        while left != NIL:
            stack[sp] = x
            sp += 1
            x = left
            left = pool[x].left
        # emit x, then keep emitting ancestors until one has a right subtree
        while True:
            visits += 1
            index = pool[x].key
            while index >= col_end:
                col_offsets[j + 1] = count
                count = 0
                j += 1
                col_end += n_rows
            values[k] = pool[x].val
            rows[k] = index - (col_end - n_rows)
            count += 1
            k += 1
            right = pool[x].right
            if right != NIL:
                x = right
                break
            if sp == 0:
                col_offsets[j + 1] = count
                for c in range(1, n_cols + 1):
                    col_offsets[c] += col_offsets[c - 1]
                return values, rows, col_offsets, visits
            sp -= 1
            x = stack[sp]


def coo_to_csc(coo: CooStorage) -> CscStorage:
    """Count elements per column, prefix-sum into offsets; rows/values carried over."""
    values, rows, columns = coo.data()
    n = coo.n_nonzero
    col_offsets = _offsets_from_columns(columns, n, coo.n_cols)
    counters.last_conversion_writes = n
    out = CscStorage(coo.n_rows, coo.n_cols, values.copy(), rows.copy(), col_offsets, n)
    if DEBUG:
        csc_audit(out)
    return out


def csc_to_coo(csc: CscStorage) -> CooStorage:
    """Unpack ``col_offsets`` into an explicit per-element column array."""
    values, rows, col_offsets = csc.data()
    columns, writes = _columns_from_offsets(col_offsets, csc.n_nonzero, csc.n_cols)
    counters.last_conversion_writes = int(writes)
    out = CooStorage(csc.n_rows, csc.n_cols, values.copy(), rows.copy(), columns, csc.n_nonzero)
    if DEBUG:
        coo_audit(out)
    return out


def csc_to_rbt(csc: CscStorage) -> RbtStorage:
    """Insert every element in column-major order.

    The keys arrive in increasing order, so each insertion takes the append
    fast path (``RbtStorage.fast_path_inserts`` counts them); rebalancing
    still runs.
    """
    values, rows, col_offsets = csc.data()
    rbt = RbtStorage(csc.n_rows, csc.n_cols, csc.n_nonzero, csc.values.dtype)
    rbt.pool, rbt.red = _csc_to_tree(
        rbt.pool, rbt.red, rbt.meta, rbt.stack, values, rows, col_offsets, csc.n_rows, csc.n_cols
    )
    if DEBUG:
        rbt_audit(rbt)
    return rbt


def rbt_to_csc(rbt: RbtStorage) -> CscStorage:
    """In-order walk of the tree, decoding each index into row and column.

    Arrays are allocated at exactly ``n_nonzero`` (no spare capacity).
    """
    n = rbt.n_nonzero
    values = np.empty(n, dtype=rbt.dtype)
    values, rows, col_offsets, visits = _tree_to_csc(
        rbt.pool, rbt.meta[M_ROOT], values, rbt.n_rows, rbt.n_cols
    )
    counters.last_traversal_visits = int(visits)
    out = CscStorage(rbt.n_rows, rbt.n_cols, values, rows, col_offsets, n)
    if DEBUG:
        csc_audit(out)
    return out


__all__ = ["coo_to_csc", "csc_to_coo", "csc_to_rbt", "rbt_to_csc"]
