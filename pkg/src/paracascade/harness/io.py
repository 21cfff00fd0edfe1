"""PCF1 field snapshots and CSV logs.

PCF1 layout (little-endian): 4 bytes ``b"PCF1"``, uint32 ``n``, float64 ``L``,
then ``n * n`` float64 physical values in row-major order (axis 0 = ``x1``).
"""
from __future__ import annotations

import csv
import struct

import numpy as np

MAGIC = b"PCF1"
_HEADER = struct.Struct("<4sId")


class SnapshotError(ValueError):
    pass


def write_pcf1(path, values, L):
    values = np.asarray(values, dtype="<f8")
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise SnapshotError("snapshot must be a square 2D array")
    if not np.all(np.isfinite(values)):
        raise SnapshotError("snapshot contains non-finite values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, values.shape[0], float(L)))
        fh.write(np.ascontiguousarray(values).tobytes(order="C"))


def read_pcf1(path):
    """Return ``(values, L)``."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise SnapshotError("truncated PCF1 header")
        magic, n, L = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
        body = fh.read()
    if len(body) != 8 * n * n:
        raise SnapshotError(f"PCF1 body has {len(body)} bytes, expected {8 * n * n}")
    return np.frombuffer(body, dtype="<f8").reshape(n, n).astype(float), L


RUNLOG_COLUMNS = ("t", "energy", "enstrophy", "omega_max", "det_drift", "dealias_mass",
                  "adapted_norm", "adapted_norm_dyadic")


def write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in columns])


def read_rows(path):
    with open(path) as fh:
        rd = csv.DictReader(fh)
        return [{k: float(v) for k, v in r.items()} for r in rd]


def read_verdicts(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                k, _, v = line.partition(" = ")
                out[k] = v
    return out
