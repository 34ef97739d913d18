"""Minimal binary containers for cubes and planes.

Cube files: magic ``HSC1``, three little-endian u32 (rows, cols, bands),
then rows*cols*bands little-endian float32 in band-major order (band
slowest, then rows, then columns). Plane files: magic ``HSP1``, two u32
(rows, cols), then row-major float32. Masks are stored as planes holding
only 0.0/1.0.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "read_cube",
    "write_cube",
    "read_plane",
    "write_plane",
    "read_mask",
]

CUBE_MAGIC = b"HSC1"
PLANE_MAGIC = b"HSP1"


def _read_payload(
    raw: bytes, path: str, magic: bytes, header_fmt: str
) -> tuple[tuple[int, ...], np.ndarray]:
    header_len = 4 + struct.calcsize(header_fmt)
    if len(raw) < header_len:
        raise DataError(f"{path}: truncated header ({len(raw)} < {header_len} bytes)")
    if raw[:4] != magic:
        raise DataError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")
    dims = struct.unpack_from(header_fmt, raw, 4)
    count = int(np.prod(dims))
    expected = header_len + 4 * count
    if len(raw) != expected:
        raise DataError(
            f"{path}: payload length mismatch, expected {expected} bytes, "
            f"got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=header_len, count=count)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        offset = header_len + 4 * int(bad[0])
        raise DataError(f"{path}: non-finite value at byte offset {offset}")
    return dims, data


def read_cube(path: str | Path) -> np.ndarray:
    """Load an HSC1 file as a float64 cube of shape (rows, cols, bands)."""
    raw = Path(path).read_bytes()
    (rows, cols, bands), data = _read_payload(raw, str(path), CUBE_MAGIC, "<III")
    cube = data.astype(np.float64).reshape(bands, rows, cols)
    return np.ascontiguousarray(cube.transpose(1, 2, 0))


def write_cube(cube: np.ndarray, path: str | Path) -> None:
    """Write a cube as HSC1 (values stored at float32 precision)."""
    cube = np.asarray(cube)
    if cube.ndim != 3:
        raise DataError(f"cube must be 3D, got ndim={cube.ndim}")
    if not np.all(np.isfinite(cube)):
        raise DataError("cube contains non-finite values")
    rows, cols, bands = cube.shape
    header = CUBE_MAGIC + struct.pack("<III", rows, cols, bands)
    payload = np.ascontiguousarray(cube.transpose(2, 0, 1), dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_plane(path: str | Path) -> np.ndarray:
    """Load an HSP1 file as a float64 matrix."""
    raw = Path(path).read_bytes()
    (rows, cols), data = _read_payload(raw, str(path), PLANE_MAGIC, "<II")
    return data.astype(np.float64).reshape(rows, cols)


def write_plane(plane: np.ndarray, path: str | Path) -> None:
    """Write a matrix as HSP1 (float32 precision)."""
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise DataError(f"plane must be 2D, got ndim={plane.ndim}")
    if not np.all(np.isfinite(plane)):
        raise DataError("plane contains non-finite values")
    rows, cols = plane.shape
    header = PLANE_MAGIC + struct.pack("<II", rows, cols)
    payload = np.ascontiguousarray(plane, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_mask(path: str | Path) -> np.ndarray:
    """Load a plane and validate that it only contains 0.0/1.0."""
    mask = read_plane(path)
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise DataError(f"{path}: mask plane contains values other than 0/1")
    return mask
