"""The user-facing sparse matrix with automatic format switching.

An :class:`SpMat` holds exactly one authoritative representation.  Element
writes move it to RBT form, algebra syncs it to CSC, bulk coordinate
transforms use COO.  Reads are served from whatever form is current and never
trigger a conversion.
"""

from __future__ import annotations

import enum
import sys
from typing import Iterator, TextIO

import numpy as np

from . import convert
from .errors import BoundsError
from .storage.coo import CooStorage, coo_build_from_triplets, coo_get
from .storage.csc import INDEX, CscStorage, csc_columns, csc_get
from .storage.rbt import RbtStorage, rbt_arrays, rbt_delete, rbt_insert, rbt_lookup


class Format(enum.Enum):
    CSC = "csc"
    RBT = "rbt"
    COO = "coo"


class SpMat:
    """Sparse matrix of doubles with hybrid CSC / RBT / COO storage.

    >>> X = SpMat(1000, 1000)
    >>> X[1, 1] = 1.23
    >>> X[1, 1]
    1.23

    Arithmetic operators build lazy expressions (see :mod:`hybridsparse.expr`);
    ``@`` is matrix multiplication and ``*`` scales by a number.
    """

    # keep numpy from broadcasting over SpMat in ``vector @ X``
    __array_ufunc__ = None

    def __init__(self, n_rows: int, n_cols: int, dtype=np.float64):
        if n_rows < 0 or n_cols < 0:
            raise ValueError("dimensions must be non-negative")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self._state = Format.CSC
        self._csc: CscStorage | None = CscStorage.empty(n_rows, n_cols, dtype=dtype)
        self._rbt: RbtStorage | None = None
        self._coo: CooStorage | None = None
        self._conversions = 0

    # -- construction -------------------------------------------------------

    @classmethod
    def _wrap(cls, storage) -> "SpMat":
        m = cls.__new__(cls)
        m.n_rows = storage.n_rows
        m.n_cols = storage.n_cols
        m._csc = m._rbt = m._coo = None
        m._conversions = 0
        if isinstance(storage, CscStorage):
            m._state, m._csc = Format.CSC, storage
        elif isinstance(storage, RbtStorage):
            m._state, m._rbt = Format.RBT, storage
        elif isinstance(storage, CooStorage):
            m._state, m._coo = Format.COO, storage
        else:
            raise TypeError(f"not a storage object: {storage!r}")
        return m

    @classmethod
    def from_triplets(cls, n_rows: int, n_cols: int, triplets) -> "SpMat":
        """Batch construction; duplicates resolve last-wins, zeros are dropped."""
        return cls._wrap(convert.coo_to_csc(coo_build_from_triplets(n_rows, n_cols, triplets)))

    @classmethod
    def from_dense(cls, array) -> "SpMat":
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        cols, rows = np.nonzero(a.T)
        values = a[rows, cols]
        col_offsets = np.zeros(a.shape[1] + 1, dtype=INDEX)
        np.cumsum(np.bincount(cols, minlength=a.shape[1]), out=col_offsets[1:])
        return cls._wrap(
            CscStorage(a.shape[0], a.shape[1], values, rows.astype(INDEX), col_offsets, len(values))
        )

    def copy(self) -> "SpMat":
        storage = {Format.CSC: self._csc, Format.RBT: self._rbt, Format.COO: self._coo}[self._state]
        return SpMat._wrap(storage.copy())

    # -- state machine ------------------------------------------------------

    @property
    def state(self) -> Format:
        return self._state

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def n_nonzero(self) -> int:
        return self._authority().n_nonzero

    @property
    def density(self) -> float:
        total = self.n_rows * self.n_cols
        return self.n_nonzero / total if total else 0.0

    def _authority(self):
        if self._state is Format.CSC:
            return self._csc
        if self._state is Format.RBT:
            return self._rbt
        return self._coo

    def _adopt(self, state: Format, storage) -> None:
        self._csc = self._rbt = self._coo = None
        self._state = state
        if state is Format.CSC:
            self._csc = storage
        elif state is Format.RBT:
            self._rbt = storage
        else:
            self._coo = storage

    def ensure_csc(self) -> "SpMat":
        if self._state is Format.RBT:
            self._conversions += 1
            self._adopt(Format.CSC, convert.rbt_to_csc(self._rbt))
        elif self._state is Format.COO:
            self._conversions += 1
            self._adopt(Format.CSC, convert.coo_to_csc(self._coo))
        return self

    def ensure_rbt(self) -> "SpMat":
        if self._state is Format.RBT:
            return self
        self.ensure_csc()
        self._conversions += 1
        self._adopt(Format.RBT, convert.csc_to_rbt(self._csc))
        return self

    def ensure_coo(self) -> "SpMat":
        if self._state is Format.COO:
            return self
        self.ensure_csc()
        self._conversions += 1
        self._adopt(Format.COO, convert.csc_to_coo(self._csc))
        return self

    def csc(self) -> CscStorage:
        """Sync to CSC and return the storage (shared, not copied)."""
        return self.ensure_csc()._csc

    def coo(self) -> CooStorage:
        return self.ensure_coo()._coo

    def read_only_view(self) -> "ReadOnlyView":
        return ReadOnlyView(self.csc())

    # -- element access -----------------------------------------------------

    def _check(self, row: int, col: int) -> None:
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise BoundsError(f"({row}, {col}) outside {self.n_rows}x{self.n_cols} matrix")

    def get(self, row: int, col: int) -> float:
        self._check(row, col)
        if self._state is Format.CSC:
            return float(csc_get(self._csc, row, col))
        if self._state is Format.RBT:
            return float(rbt_lookup(self._rbt, row + col * self.n_rows))
        return float(coo_get(self._coo, row, col))

    def set(self, row: int, col: int, value: float) -> "SpMat":
        self._check(row, col)
        self.ensure_rbt()
        index = row + col * self.n_rows
        if value == 0:
            rbt_delete(self._rbt, index)
        else:
            rbt_insert(self._rbt, index, value)
        return self

    def set_add(self, row: int, col: int, delta: float) -> "SpMat":
        self._check(row, col)
        self.ensure_rbt()
        return self.set(row, col, rbt_lookup(self._rbt, row + col * self.n_rows) + delta)

    def __getitem__(self, key):
        row, col = key
        return self.get(row, col)

    def __setitem__(self, key, value):
        row, col = key
        self.set(row, col, value)

    # -- bulk views ---------------------------------------------------------

    def triplet_arrays(self):
        """``(rows, cols, values)`` in column-major order, read from the current form."""
        if self._state is Format.CSC:
            v, r, _ = self._csc.data()
            return r, csc_columns(self._csc), v
        if self._state is Format.COO:
            v, r, c = self._coo.data()
            return r, c, v
        keys, v = rbt_arrays(self._rbt)
        return keys % self.n_rows, keys // self.n_rows, v

    def triplets(self) -> Iterator[tuple[int, int, float]]:
        r, c, v = self.triplet_arrays()
        return zip(r.tolist(), c.tolist(), v.tolist())

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        r, c, v = self.triplet_arrays()
        out[r, c] = v
        return out

    def equals(self, other: "SpMat") -> bool:
        """Same shape and identical (row, col, value) sets, whatever the storage."""
        if not isinstance(other, SpMat) or self.shape != other.shape:
            return False
        a = self.triplet_arrays()
        b = other.triplet_arrays()
        return all(np.array_equal(x, y) for x, y in zip(a, b))

    def __eq__(self, other):
        if not isinstance(other, SpMat):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    # -- output -------------------------------------------------------------

    def print(self, sink: TextIO | None = None, header: str = "") -> None:
        """Write dimensions, count, density and the ordered element list."""
        sink = sys.stdout if sink is None else sink
        if header:
            sink.write(header + "\n")
        sink.write(
            f"[matrix size: {self.n_rows}x{self.n_cols}; n_nonzero: {self.n_nonzero}; "
            f"density: {100 * self.density:.2f}%]\n"
        )
        for r, c, v in self.triplets():
            sink.write(f"     ({r}, {c})    {v:.4f}\n")

    def __repr__(self):
        return (
            f"SpMat({self.n_rows}x{self.n_cols}, n_nonzero={self.n_nonzero}, "
            f"state={self._state.value})"
        )

    def save(self, target) -> None:
        from .io import save_matrix_market

        save_matrix_market(self, target)

    @classmethod
    def load(cls, source) -> "SpMat":
        from .io import load_matrix_market

        return load_matrix_market(source)

    # -- lazy expression operators -----------------------------------------

    def t(self):
        from .expr import Leaf

        return Leaf(self).t()

    def __add__(self, other):
        from .expr import Leaf

        return Leaf(self) + other

    def __radd__(self, other):
        from .expr import Leaf

        return other + Leaf(self)

    def __sub__(self, other):
        from .expr import Leaf

        return Leaf(self) - other

    def __neg__(self):
        from .expr import Leaf

        return -Leaf(self)

    def __mul__(self, k):
        from .expr import Leaf

        return Leaf(self) * k

    def __rmul__(self, k):
        from .expr import Leaf

        return k * Leaf(self)

    def __matmul__(self, other):
        from .expr import Leaf

        return Leaf(self) @ other

    def __rmatmul__(self, other):
        from .expr import Leaf

        if isinstance(other, np.ndarray):
            from .kernels import vec_mat_mul

            return vec_mat_mul(other, self)
        return other @ Leaf(self)


class ReadOnlyView:
    """Shared read access to a CSC snapshot.

    Several threads may read one view concurrently; the owning matrix is not
    touched, so later writes to it do not show up here.
    """

    __slots__ = ("_csc",)

    def __init__(self, csc: CscStorage):
        self._csc = csc

    @property
    def shape(self):
        return self._csc.shape

    @property
    def n_nonzero(self):
        return self._csc.n_nonzero

    def get(self, row: int, col: int) -> float:
        return float(csc_get(self._csc, row, col))

    def __getitem__(self, key):
        return self.get(*key)

    def triplets(self):
        v, r, _ = self._csc.data()
        return zip(r.tolist(), csc_columns(self._csc).tolist(), v.tolist())


def introspect(m: SpMat) -> dict:
    """Test hook: current format and the number of conversions performed."""
    return {"state": m._state, "conversions": m._conversions}


def speye(n_rows: int, n_cols: int) -> SpMat:
    """Ones on the main diagonal."""
    if n_rows <= 0 or n_cols <= 0:
        raise ValueError("speye needs positive dimensions")
    k = min(n_rows, n_cols)
    col_offsets = np.zeros(n_cols + 1, dtype=INDEX)
    col_offsets[1 : k + 1] = np.arange(1, k + 1)
    col_offsets[k + 1 :] = k
    return SpMat._wrap(
        CscStorage(n_rows, n_cols, np.ones(k), np.arange(k, dtype=INDEX), col_offsets, k)
    )


def sprandu(n_rows: int, n_cols: int, density: float, seed=None) -> SpMat:
    """Random matrix with exactly ``round(density * n_rows * n_cols)`` nonzeros.

    Positions are drawn uniformly without replacement, values uniformly from
    (0, 1].  The same ``seed`` always gives the same matrix.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    total = n_rows * n_cols
    k = int(round(density * total))
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(total, size=k, replace=False)) if k else np.empty(0, INDEX)
    values = 1.0 - rng.random(k)
    positions = positions.astype(INDEX)
    cols = positions // n_rows
    rows = positions - cols * n_rows
    col_offsets = np.zeros(n_cols + 1, dtype=INDEX)
    np.cumsum(np.bincount(cols, minlength=n_cols), out=col_offsets[1:])
    return SpMat._wrap(CscStorage(n_rows, n_cols, values, rows, col_offsets, k))
