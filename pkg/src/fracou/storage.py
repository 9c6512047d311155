"""Ensemble serialization: a columnar binary layout and a long-format CSV.

Binary layout (little-endian):

* 8-byte magic ``b"FRACOU\\x00\\x01"``;
* unsigned 64-bit length of the header in bytes;
* UTF-8 JSON header with ``seed``, ``grid``, ``process``, ``meta`` and ``shape``;
* body of ``n_paths * n`` float64 values, row-major (one row per path).

The CSV form is ``path,t,value`` with floats written to 17 significant digits,
so both formats round-trip every value exactly.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from . import kernels as kn
from .analytics import OUSpec
from .errors import DomainError
from .simulate import Grid, PathEnsemble

__all__ = [
    "MAGIC",
    "spec_from_params",
    "process_params",
    "write_ensemble",
    "read_ensemble",
    "write_csv",
    "read_csv",
    "save",
    "load",
    "fmt_float",
]

MAGIC = b"FRACOU\x00\x01"
_LEN = struct.Struct("<Q")


def fmt_float(x: float) -> str:
    """Shortest text with 17 significant digits that parses back to ``x`` exactly."""
    return format(float(x), ".17g")


def process_params(p) -> dict:
    return dict(p.params())


def spec_from_params(d: dict):
    """Inverse of ``params()`` for process and OU records."""
    name = d.get("process")
    if name is None:
        raise DomainError("process record has no 'process' field")
    q = d.get("q")
    p = kn.process_from_name(
        name,
        float(d["H"]),
        K=None if d.get("K") is None else float(d["K"]),
        q=None if q is None else int(q),
    )
    kind = d.get("kind")
    if kind is None:
        return p
    theta = float(d["theta"])
    if kind == "first":
        return OUSpec.first(p, theta)
    if kind == "second":
        return OUSpec.second(p, theta)
    raise DomainError(f"unknown noise kind {kind!r}")


def _header(e: PathEnsemble) -> dict:
    return {
        "seed": int(e.seed),
        "grid": e.grid.to_dict(),
        "process": process_params(e.process),
        "meta": e.meta,
        "shape": [int(e.n_paths), int(e.grid.n)],
    }


def _from_header(h: dict, paths: np.ndarray) -> PathEnsemble:
    grid = Grid.from_dict(h["grid"])
    return PathEnsemble(grid, paths, int(h["seed"]), spec_from_params(h["process"]), dict(h.get("meta", {})))


def write_ensemble(e: PathEnsemble, path) -> Path:
    path = Path(path)
    head = json.dumps(_header(e), sort_keys=True).encode("utf-8")
    body = np.ascontiguousarray(e.paths, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_LEN.pack(len(head)))
        fh.write(head)
        fh.write(body.tobytes(order="C"))
    return path


def read_ensemble(path) -> PathEnsemble:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise DomainError(f"{path} is not a binary ensemble file")
        (size,) = _LEN.unpack(fh.read(_LEN.size))
        h = json.loads(fh.read(size).decode("utf-8"))
        rows, cols = h["shape"]
        body = np.frombuffer(fh.read(), dtype="<f8")
    if body.size != rows * cols:
        raise DomainError(f"{path}: expected {rows * cols} values, found {body.size}")
    return _from_header(h, body.reshape(rows, cols).astype(float))


def write_csv(e: PathEnsemble, path) -> Path:
    """Long-format CSV; the header record is stored as a leading ``#`` comment line."""
    path = Path(path)
    pts = e.grid.points
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(_header(e), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["path", "t", "value"])
        for i, row in enumerate(e.paths):
            for t, v in zip(pts, row):
                w.writerow([i, fmt_float(t), fmt_float(v)])
    return path


def read_csv(path) -> PathEnsemble:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise DomainError(f"{path} has no ensemble header line")
        h = json.loads(first[2:])
        rows, cols = h["shape"]
        paths = np.empty((rows, cols))
        reader = csv.reader(fh)
        if next(reader) != ["path", "t", "value"]:
            raise DomainError(f"{path}: unexpected CSV columns")
        count = 0
        for rec in reader:
            paths.flat[count] = float(rec[2])
            count += 1
    if count != rows * cols:
        raise DomainError(f"{path}: expected {rows * cols} rows, found {count}")
    return _from_header(h, paths)


def save(e: PathEnsemble, path) -> Path:
    """Write CSV for a ``.csv`` suffix and the binary layout otherwise."""
    return write_csv(e, path) if Path(path).suffix.lower() == ".csv" else write_ensemble(e, path)


def load(path) -> PathEnsemble:
    return read_csv(path) if Path(path).suffix.lower() == ".csv" else read_ensemble(path)
