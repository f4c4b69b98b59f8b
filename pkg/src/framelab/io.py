"""File formats: JSON reports, CSV plot data and the binary grid layout.

Binary grid layout, little endian:

    bytes 0-7    magic b"FLGRID\\x00\\x01"
    bytes 8-19   three uint32 dimensions (Nx, Ny, Nt)
    bytes 20-23  uint32 reserved, written as 0
    bytes 24-    Nx*Ny*Nt float64 values, row-major (last index fastest)
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

GRID_MAGIC = b"FLGRID\x00\x01"
GRID_HEADER = struct.Struct("<8s3II")


def write_grid(path, arr: np.ndarray) -> int:
    arr = np.asarray(arr, dtype="<f8")
    if arr.ndim != 3:
        raise ValueError("grid must be 3-dimensional")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(GRID_HEADER.pack(GRID_MAGIC, *arr.shape, 0))
        fh.write(np.ascontiguousarray(arr).tobytes())
    return path.stat().st_size


def read_grid(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < GRID_HEADER.size:
        raise ValueError("file too short for a grid header")
    magic, nx, ny, nt, _ = GRID_HEADER.unpack_from(raw)
    if magic != GRID_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    count = nx * ny * nt
    if len(raw) != GRID_HEADER.size + 8 * count:
        raise ValueError(f"payload size mismatch for dims {(nx, ny, nt)}")
    return np.frombuffer(raw, dtype="<f8", offset=GRID_HEADER.size).reshape(nx, ny, nt).astype(np.float64)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> int:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path.stat().st_size


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v) or np.isinf(v):
            return None
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> int:
    path = Path(path)
    path.write_text(dumps(obj))
    return path.stat().st_size


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
