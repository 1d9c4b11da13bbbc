"""MatrixMarket coordinate files and CSV benchmark results.

Only the ``coordinate real general`` MatrixMarket variant is handled.  Indices
are one-based on disk and zero-based in memory; the shift happens here and
nowhere else.
"""

from __future__ import annotations

import csv
import io as _io
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, TextIO, Union

import numpy as np

from .convert import coo_to_csc
from .errors import SparseError
from .hybrid import SpMat
from .storage.coo import CooStorage, coo_canonicalize
from .storage.csc import INDEX

HEADER = "%%MatrixMarket matrix coordinate real general"
CSV_COLUMNS = ("experiment", "format", "n_rows", "n_cols", "density", "rep", "seconds")

PathOrFile = Union[str, os.PathLike, BinaryIO, TextIO]


class MatrixMarketError(SparseError, ValueError):
    """Malformed MatrixMarket input; ``line`` is the one-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class HeaderError(MatrixMarketError):
    pass


class EntryBoundsError(MatrixMarketError):
    pass


class EntryValueError(MatrixMarketError):
    pass


class EntryCountError(MatrixMarketError):
    pass


@dataclass
class MatrixRecord:
    """File contents as read: declared sizes and the one-based triplets."""

    n_rows: int
    n_cols: int
    n_nonzero: int
    triplets: list = field(default_factory=list)


@dataclass
class BenchRecord:
    experiment: str
    format: str
    n_rows: int
    n_cols: int
    density: float
    rep: int
    seconds: float


def _open_text(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, encoding="ascii", newline="\n"), True
    if isinstance(target, (_io.TextIOBase,)):
        return target, False
    # binary stream: wrap without taking ownership
    wrapper = _io.TextIOWrapper(target, encoding="ascii", newline="\n")
    return wrapper, "detach"


def _close(handle, owned):
    if owned is True:
        handle.close()
    elif owned == "detach":
        handle.flush()
        handle.detach()


def format_matrix_market(m: SpMat) -> str:
    rows, cols, vals = m.triplet_arrays()
    lines = [HEADER, f"{m.n_rows} {m.n_cols} {len(vals)}"]
    lines.extend(
        f"{r + 1} {c + 1} {v:.17g}" for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist())
    )
    return "\n".join(lines) + "\n"


def save_matrix_market(m: SpMat, target: PathOrFile) -> None:
    """Write ``m`` column-major with 17 significant digits (exact round trip)."""
    handle, owned = _open_text(target, "w")
    try:
        handle.write(format_matrix_market(m))
    finally:
        _close(handle, owned)


def read_matrix_record(source: PathOrFile) -> MatrixRecord:
    handle, owned = _open_text(source, "r")
    try:
        lines = handle.read().splitlines()
    finally:
        _close(handle, owned)
    return parse_matrix_market(lines)


def parse_matrix_market(lines: Iterable[str]) -> MatrixRecord:
    it = iter(enumerate(lines, start=1))
    try:
        number, first = next(it)
    except StopIteration:
        raise HeaderError("empty file", 1) from None
    banner = first.split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket":
        raise HeaderError("missing %%MatrixMarket banner", number)
    if [b.lower() for b in banner[1:]] != ["matrix", "coordinate", "real", "general"]:
        raise HeaderError(f"unsupported variant {' '.join(banner[1:])!r}", number)

    record = None
    for number, line in it:
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if record is None:
            try:
                n_rows, n_cols, count = (int(p) for p in parts)
            except ValueError:
                raise HeaderError(f"bad size line {text!r}", number) from None
            if n_rows < 0 or n_cols < 0 or count < 0:
                raise HeaderError(f"negative size in {text!r}", number)
            record = MatrixRecord(n_rows, n_cols, count)
            continue
        if len(parts) != 3:
            raise EntryValueError(f"expected 'row col value', got {text!r}", number)
        try:
            r, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise EntryValueError(f"non-integer index in {text!r}", number) from None
        try:
            v = float(parts[2])
        except ValueError:
            raise EntryValueError(f"non-numeric value {parts[2]!r}", number) from None
        if not (1 <= r <= record.n_rows and 1 <= c <= record.n_cols):
            raise EntryBoundsError(
                f"entry ({r}, {c}) outside declared {record.n_rows}x{record.n_cols}", number
            )
        if len(record.triplets) == record.n_nonzero:
            raise EntryCountError(f"more than the declared {record.n_nonzero} entries", number)
        record.triplets.append((r, c, v))
    if record is None:
        raise HeaderError("missing size line", number + 1)
    if len(record.triplets) != record.n_nonzero:
        raise EntryCountError(
            f"declared {record.n_nonzero} entries, found {len(record.triplets)}", number + 1
        )
    return record


def record_to_matrix(record: MatrixRecord) -> SpMat:
    n = len(record.triplets)
    if n:
        r, c, v = zip(*record.triplets)
    else:
        r, c, v = (), (), ()
    rows = np.asarray(r, dtype=INDEX) - 1
    cols = np.asarray(c, dtype=INDEX) - 1
    coo = CooStorage(record.n_rows, record.n_cols, np.asarray(v, dtype=np.float64), rows, cols, n)
    return SpMat._wrap(coo_to_csc(coo_canonicalize(coo)))


def load_matrix_market(source: PathOrFile) -> SpMat:
    """Read a coordinate real general file into a CSC-state matrix.

    Entries may come in any order; a repeated position keeps its last value
    and explicit zeros are dropped.
    """
    return record_to_matrix(read_matrix_record(source))


def write_csv_results(records: Iterable[BenchRecord], target: PathOrFile) -> None:
    handle, owned = _open_text(target, "w")
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.experiment,
                    rec.format,
                    rec.n_rows,
                    rec.n_cols,
                    repr(float(rec.density)),
                    rec.rep,
                    f"{rec.seconds:.6f}",
                ]
            )
    finally:
        _close(handle, owned)


def read_csv_results(source: PathOrFile) -> list[BenchRecord]:
    handle, owned = _open_text(source, "r")
    try:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            BenchRecord(
                row["experiment"],
                row["format"],
                int(row["n_rows"]),
                int(row["n_cols"]),
                float(row["density"]),
                int(row["rep"]),
                float(row["seconds"]),
            )
            for row in reader
        ]
    finally:
        _close(handle, owned)


__all__ = [
    "BenchRecord",
    "EntryBoundsError",
    "EntryCountError",
    "EntryValueError",
    "HeaderError",
    "MatrixMarketError",
    "MatrixRecord",
    "load_matrix_market",
    "read_csv_results",
    "save_matrix_market",
    "write_csv_results",
]
