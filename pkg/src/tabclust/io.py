"""Reading and writing embedding matrices and label files.

Two matrix formats are supported:

* ``csv``: UTF-8, comma separated, one instance per line, optional header
  line (skipped with ``header=True``).
* ``bin``: the bytes ``TDC1``, then ``n`` and ``d`` as little-endian uint32,
  then ``n*d`` little-endian float32 values in row-major order.
"""
import csv
import logging
import math
import struct

import numpy as np

from .errors import (
    EmptyInput,
    LengthMismatch,
    NegativeLabel,
    NonFiniteValue,
    NonIntegerLine,
    NonNumericCell,
    RaggedRows,
    TabclustError,
)

log = logging.getLogger(__name__)

MAGIC = b"TDC1"
_HEADER = struct.Struct("<4sII")


def _check_finite(M, path):
    bad = np.argwhere(~np.isfinite(M))
    if bad.size:
        i, j = bad[0]
        raise NonFiniteValue(f"{path}: non-finite value at row {i}, col {j}")


def read_csv_matrix(path, header=False):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        width = None
        for lineno, record in enumerate(reader, start=2 if header else 1):
            if not record or all(not c.strip() for c in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise RaggedRows(f"{path}:{lineno}: {len(record)} columns, expected {width}")
            try:
                rows.append([float(c) for c in record])
            except ValueError:
                col = next(k for k, c in enumerate(record) if not _is_float(c))
                raise NonNumericCell(
                    f"{path}:{lineno}: column {col} is not a number: {record[col]!r}") from None
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    M = np.array(rows, dtype=np.float64)
    _check_finite(M, path)
    return M


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_bin_matrix(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise TabclustError(f"{path}: truncated header")
        magic, n, d = _HEADER.unpack(head)
        if magic != MAGIC:
            raise TabclustError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != n * d:
        raise TabclustError(f"{path}: expected {n * d} values, found {data.size}")
    M = data.reshape(n, d).astype(np.float64)
    _check_finite(M, path)
    return M


def write_bin_matrix(path, M):
    M = np.asarray(M)
    if M.ndim != 2:
        raise TabclustError("matrix must be 2-D")
    n, d = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, d))
        fh.write(np.ascontiguousarray(M, dtype="<f4").tobytes())


def write_csv_matrix(path, M):
    np.savetxt(path, np.asarray(M), delimiter=",", fmt="%.17g")


def load_matrix(path, fmt="csv", header=False):
    """Embedding matrix (float64) from ``path`` in ``csv`` or ``bin`` format."""
    if fmt == "csv":
        M = read_csv_matrix(path, header=header)
    elif fmt in ("bin", "binary"):
        M = read_bin_matrix(path)
    else:
        raise TabclustError(f"unknown matrix format {fmt!r}")
    log.info("loaded %s: n=%d d=%d", path, *M.shape)
    return M


def load_labels(path, n=None):
    """One non-negative integer per line; blank lines are skipped."""
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                v = int(s)
            except ValueError:
                try:
                    f = float(s)
                except ValueError:
                    f = math.nan
                if not f.is_integer():
                    raise NonIntegerLine(f"{path}:{lineno}: not an integer: {s!r}") from None
                v = int(f)
            if v < 0:
                raise NegativeLabel(f"{path}:{lineno}: negative label {v}")
            labels.append(v)
    if not labels:
        raise EmptyInput(f"{path}: no labels")
    y = np.array(labels, dtype=np.int64)
    if n is not None and y.size != n:
        raise LengthMismatch(f"{path}: {y.size} labels for {n} instances")
    log.info("loaded %s: %d labels, %d distinct", path, y.size, np.unique(y).size)
    return y


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)
