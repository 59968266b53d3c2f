"""Dataset file formats.

CSV: headerless rows of decimal floats, comma-separated, uniform column
count. BIN: magic "VDAT", version u32 LE, rows u64 LE, cols u64 LE, then
rows*cols float64 LE in row-major order. BIN round-trips bit-exactly;
CSV is written with 17 significant digits so float64 values survive the
text round-trip.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError

BIN_MAGIC = b"VDAT"
BIN_VERSION = 1

CSV = "csv"
BIN = "bin"
FORMATS = (CSV, BIN)


def load_dataset(path, fmt: str, require_unit_range: bool = False) -> np.ndarray:
    """Read a dataset matrix; optionally enforce values in [0, 1] (Bernoulli jobs)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    if fmt == CSV:
        data = _load_csv(path)
    elif fmt == BIN:
        data = _load_bin(path)
    else:
        raise DataError(f"unknown dataset format {fmt!r}")
    if not np.isfinite(data).all():
        raise DataError(f"{path}: dataset contains non-finite values")
    if require_unit_range and (data.min() < 0.0 or data.max() > 1.0):
        raise DataError(f"{path}: Bernoulli-family jobs require values in [0, 1]")
    return data


def save_dataset(data: np.ndarray, path, fmt: str) -> None:
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("dataset must be a 2-D array")
    path = Path(path)
    if fmt == CSV:
        np.savetxt(path, data, fmt="%.17g", delimiter=",")
    elif fmt == BIN:
        with open(path, "wb") as fh:
            fh.write(BIN_MAGIC)
            fh.write(struct.pack("<I", BIN_VERSION))
            fh.write(struct.pack("<QQ", data.shape[0], data.shape[1]))
            fh.write(data.astype("<f8").tobytes())
    else:
        raise DataError(f"unknown dataset format {fmt!r}")


def _load_csv(path: Path) -> np.ndarray:
    rows = []
    cols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if cols is None:
                cols = len(cells)
            elif len(cells) != cols:
                raise DataError(f"{path}: line {lineno} has {len(cells)} cells, expected {cols}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-numeric cell ({exc})") from exc
    if not rows:
        raise DataError(f"{path}: empty dataset")
    return np.asarray(rows, dtype=np.float64)


def _load_bin(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BIN_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {BIN_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != BIN_VERSION:
            raise DataError(f"{path}: unsupported format version {version}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        payload = fh.read(rows * cols * 8)
        if len(payload) != rows * cols * 8:
            raise DataError(f"{path}: truncated payload")
        extra = fh.read(1)
        if extra:
            raise DataError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
