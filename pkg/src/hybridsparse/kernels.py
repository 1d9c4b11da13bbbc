"""Eager kernels on CSC (algebra, reductions) and COO (bulk coordinate moves).

Every kernel syncs its operands explicitly, never stores an exact zero, and
returns a fresh matrix.  Accumulation runs in column-major input order, so
results are reproducible bit for bit.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from ._instrument import counters
from .errors import DimensionMismatch
from .hybrid import SpMat
from .storage.coo import CooStorage, _canonicalize
from .storage.csc import INDEX, CscStorage, _find, csc_columns


def _csc_result(n_rows, n_cols, values, rows, col_offsets) -> SpMat:
    return SpMat._wrap(CscStorage(n_rows, n_cols, values, rows, col_offsets, len(values)))


def _same_shape(a: SpMat, b: SpMat, what: str) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{what}: {a.n_rows}x{a.n_cols} vs {b.n_rows}x{b.n_cols}")


@nb.njit(cache=True)
def _scale(values, rows, col_offsets, n_cols, k):
    out_v = np.empty(values.shape[0], dtype=values.dtype)
    out_r = np.empty(values.shape[0], dtype=rows.dtype)
    offsets = np.zeros(n_cols + 1, dtype=np.int64)
    n = 0
    for j in range(n_cols):
        for p in range(col_offsets[j], col_offsets[j + 1]):
            s = values[p] * k
            if s != 0:
                out_v[n] = s
                out_r[n] = rows[p]
                n += 1
        offsets[j + 1] = n
    return out_v[:n].copy(), out_r[:n].copy(), offsets


def scalar_mul(a: SpMat, k: float) -> SpMat:
    """Multiply every stored value by ``k``; products equal to zero are dropped."""
    v, r, c = a.csc().data()
    return _csc_result(a.n_rows, a.n_cols, *_scale(v, r, c, a.n_cols, float(k)))


@nb.njit(cache=True)
def _add(n_cols, av, ar, ac, bv, br, bc):
    # pass 1 sizes the result pattern, pass 2 fills it
    offsets = np.zeros(n_cols + 1, dtype=np.int64)
    for j in range(n_cols):
        p, pe, q, qe = ac[j], ac[j + 1], bc[j], bc[j + 1]
        c = 0
        while p < pe or q < qe:
            if q >= qe or (p < pe and ar[p] < br[q]):
                s = av[p]
                p += 1
            elif p >= pe or br[q] < ar[p]:
                s = bv[q]
                q += 1
            else:
                s = av[p] + bv[q]
                p += 1
                q += 1
            if s != 0:
                c += 1
        offsets[j + 1] = offsets[j] + c
    n = offsets[n_cols]
    vals = np.empty(n, dtype=np.float64)
    rows = np.empty(n, dtype=np.int64)
    k = 0
    for j in range(n_cols):
        p, pe, q, qe = ac[j], ac[j + 1], bc[j], bc[j + 1]
        while p < pe or q < qe:
            if q >= qe or (p < pe and ar[p] < br[q]):
                s = av[p]
                r = ar[p]
                p += 1
            elif p >= pe or br[q] < ar[p]:
                s = bv[q]
                r = br[q]
                q += 1
            else:
                s = av[p] + bv[q]
                r = ar[p]
                p += 1
                q += 1
            if s != 0:
                vals[k] = s
                rows[k] = r
                k += 1
    return vals, rows, offsets


def sp_add(a: SpMat, b: SpMat) -> SpMat:
    """Column-wise merge of two CSC matrices; exact-zero sums are not stored."""
    _same_shape(a, b, "sp_add")
    av, ar, ac = a.csc().data()
    bv, br, bc = b.csc().data()
    return _csc_result(a.n_rows, a.n_cols, *_add(a.n_cols, av, ar, ac, bv, br, bc))


@nb.njit(cache=True)
def _mul(m, n_cols, av, ar, ac, bv, br, bc):
    work = np.zeros(m, dtype=np.float64)
    occupied = np.zeros(m, dtype=np.bool_)
    pattern = np.empty(m, dtype=np.int64)
    cap = max(16, av.shape[0] + bv.shape[0])
    vals = np.empty(cap, dtype=np.float64)
    rows = np.empty(cap, dtype=np.int64)
    offsets = np.zeros(n_cols + 1, dtype=np.int64)
    n = 0
    for j in range(n_cols):
        top = 0
        for q in range(bc[j], bc[j + 1]):
            k = br[q]
            s = bv[q]
            for p in range(ac[k], ac[k + 1]):
                i = ar[p]
                if not occupied[i]:
                    occupied[i] = True
                    pattern[top] = i
                    top += 1
                work[i] += av[p] * s
        if n + top > cap:
            cap = max(2 * cap, n + top)
            nv = np.empty(cap, dtype=np.float64)
            nr = np.empty(cap, dtype=np.int64)
            nv[:n] = vals[:n]
            nr[:n] = rows[:n]
            vals, rows = nv, nr
        column = np.sort(pattern[:top])
        for t in range(top):
            i = column[t]
            if work[i] != 0:
                vals[n] = work[i]
                rows[n] = i
                n += 1
            work[i] = 0.0
            occupied[i] = False
        offsets[j + 1] = n
    return vals[:n].copy(), rows[:n].copy(), offsets


def sp_mul(a: SpMat, b: SpMat) -> SpMat:
    """Sparse product, one output column at a time with a dense accumulator.

    The accumulator has exactly ``a.n_rows`` slots; its size is recorded in
    ``counters.last_workspace``.
    """
    if a.n_cols != b.n_rows:
        raise DimensionMismatch(
            f"sp_mul: {a.n_rows}x{a.n_cols} times {b.n_rows}x{b.n_cols}"
        )
    av, ar, ac = a.csc().data()
    bv, br, bc = b.csc().data()
    counters.last_workspace = a.n_rows
    return _csc_result(a.n_rows, b.n_cols, *_mul(a.n_rows, b.n_cols, av, ar, ac, bv, br, bc))


@nb.njit(cache=True)
def _vec_mat(v, values, rows, col_offsets, n_cols):
    out = np.zeros(n_cols, dtype=np.float64)
    for j in range(n_cols):
        s = 0.0
        for p in range(col_offsets[j], col_offsets[j + 1]):
            s += v[rows[p]] * values[p]
        out[j] = s
    return out


def vec_mat_mul(v, a: SpMat) -> np.ndarray:
    """Row vector times matrix, returned as a dense array of length ``n_cols``."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != a.n_rows:
        raise DimensionMismatch(f"vector of length {v.shape} against {a.n_rows} rows")
    values, rows, col_offsets = a.csc().data()
    return _vec_mat(v, values, rows, col_offsets, a.n_cols)


@nb.njit(cache=True)
def _transpose(values, rows, col_offsets, n_rows, n_cols):
    n = values.shape[0]
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    for p in range(n):
        offsets[rows[p] + 1] += 1
    for i in range(n_rows):
        offsets[i + 1] += offsets[i]
    cursor = offsets[:-1].copy()
    out_v = np.empty(n, dtype=values.dtype)
    out_r = np.empty(n, dtype=np.int64)
    for j in range(n_cols):
        for p in range(col_offsets[j], col_offsets[j + 1]):
            dst = cursor[rows[p]]
            out_v[dst] = values[p]
            out_r[dst] = j
            cursor[rows[p]] += 1
    return out_v, out_r, offsets


def transpose_csc(a: SpMat) -> SpMat:
    """Counting transpose: histogram of rows, prefix sum, one scatter pass.

    Columns are visited in order, so each output column comes out sorted
    without a sort step.
    """
    v, r, c = a.csc().data()
    return _csc_result(a.n_cols, a.n_rows, *_transpose(v, r, c, a.n_rows, a.n_cols))


def transpose_coo_oracle(a: SpMat) -> SpMat:
    """Reference transpose: swap the coordinate arrays and re-sort."""
    v, r, c = a.coo().data()
    order = np.lexsort((c, r))
    swapped = CooStorage(a.n_cols, a.n_rows, v[order], c[order], r[order], len(v))
    return SpMat._wrap(swapped).ensure_csc()


@nb.njit(cache=True)
def _diag(values, rows, col_offsets, k):
    out = np.zeros(k, dtype=np.float64)
    for i in range(k):
        p = _find(rows, col_offsets, i, i)
        if p >= 0:
            out[i] = values[p]
    return out


def diag_extract(a: SpMat) -> np.ndarray:
    """Main diagonal as a dense vector of length ``min(n_rows, n_cols)``."""
    values, rows, col_offsets = a.csc().data()
    return _diag(values, rows, col_offsets, min(a.n_rows, a.n_cols))


def trace(a: SpMat) -> float:
    return float(diag_extract(a).sum())


@nb.njit(cache=True)
def _trace_atb(n_cols, av, ar, ac, bv, br, bc):
    total = 0.0
    for j in range(n_cols):
        p, pe, q, qe = ac[j], ac[j + 1], bc[j], bc[j + 1]
        while p < pe and q < qe:
            if ar[p] < br[q]:
                p += 1
            elif br[q] < ar[p]:
                q += 1
            else:
                total += av[p] * bv[q]
                p += 1
                q += 1
    return total


def trace_fused_atb(a: SpMat, b: SpMat) -> float:
    """``trace(a.T @ b)`` as a sum of per-column dot products.

    Neither the transpose nor the product is formed.
    """
    _same_shape(a, b, "trace_fused_atb")
    av, ar, ac = a.csc().data()
    bv, br, bc = b.csc().data()
    return float(_trace_atb(a.n_cols, av, ar, ac, bv, br, bc))


@nb.njit(cache=True)
def _diag_sum(av, ar, ac, bv, br, bc, k):
    out_v = np.empty(k, dtype=np.float64)
    out_r = np.empty(k, dtype=np.int64)
    offsets = np.zeros(k + 1, dtype=np.int64)
    n = 0
    for i in range(k):
        s = 0.0
        p = _find(ar, ac, i, i)
        if p >= 0:
            s += av[p]
        q = _find(br, bc, i, i)
        if q >= 0:
            s += bv[q]
        if s != 0:
            out_v[n] = s
            out_r[n] = i
            n += 1
        offsets[i + 1] = n
    return out_v[:n].copy(), out_r[:n].copy(), offsets


def diagmat_fused_add(a: SpMat, b: SpMat) -> SpMat:
    """``diagmat(a + b)`` from ``2 * min(n_rows, n_cols)`` lookups.

    The result is square with side ``min(n_rows, n_cols)``; the full sum is
    never formed.
    """
    _same_shape(a, b, "diagmat_fused_add")
    k = min(a.n_rows, a.n_cols)
    av, ar, ac = a.csc().data()
    bv, br, bc = b.csc().data()
    return _csc_result(k, k, *_diag_sum(av, ar, ac, bv, br, bc, k))


def diagmat(a: SpMat) -> SpMat:
    """Square matrix holding only the main diagonal of ``a``."""
    k = min(a.n_rows, a.n_cols)
    d = diag_extract(a)
    rows = np.flatnonzero(d).astype(INDEX)
    offsets = np.zeros(k + 1, dtype=INDEX)
    offsets[rows + 1] = 1
    np.cumsum(offsets, out=offsets)
    return _csc_result(k, k, d[rows], rows, offsets)


def reverse(a: SpMat, axis: str = "rows") -> SpMat:
    """Flip the matrix upside down (``axis="rows"``) or left to right (``"cols"``).

    Works on the coordinate form; the result is left in COO state.
    """
    v, r, c = a.coo().data()
    if axis == "rows":
        r = a.n_rows - 1 - r
    elif axis == "cols":
        c = a.n_cols - 1 - c
    else:
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    nv, nr, nc, n = _canonicalize(v.copy(), r.copy(), c.copy(), len(v), a.n_rows)
    return SpMat._wrap(CooStorage(a.n_rows, a.n_cols, nv, nr, nc, n))


def sum_dim(a: SpMat, dim: int = 0) -> np.ndarray:
    """Column sums (``dim=0``) or row sums (``dim=1``) as a dense vector."""
    values, rows, col_offsets = a.csc().data()
    if dim == 0:
        cols = csc_columns(a.csc())
        return np.bincount(cols, weights=values, minlength=a.n_cols).astype(np.float64)
    if dim == 1:
        return np.bincount(rows, weights=values, minlength=a.n_rows).astype(np.float64)
    raise ValueError(f"dim must be 0 or 1, got {dim!r}")


__all__ = [
    "diag_extract",
    "diagmat",
    "diagmat_fused_add",
    "reverse",
    "scalar_mul",
    "sp_add",
    "sp_mul",
    "sum_dim",
    "trace",
    "trace_fused_atb",
    "transpose_coo_oracle",
    "transpose_csc",
    "vec_mat_mul",
]
