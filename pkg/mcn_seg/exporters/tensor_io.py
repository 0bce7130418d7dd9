"""``MCNT`` tensor files.

Layout (little-endian):

    4 bytes   magic ``MCNT``
    1 byte    format version
    4 × u32   n, c, h, w
    n·c·h·w × f32 values, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from mcn_seg.config.constants import FORMAT
from mcn_seg.exceptions import TensorFormatError

_HEADER = struct.Struct("<4sB4I")


def encode_tensor(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    if array.ndim != 4:
        raise TensorFormatError(f"MCNT stores rank-4 arrays, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise TensorFormatError("refusing to store non-finite values")
    header = _HEADER.pack(FORMAT.TENSOR_MAGIC, FORMAT.TENSOR_VERSION, *array.shape)
    return header + np.ascontiguousarray(array, dtype="<f4").tobytes()


def decode_tensor(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise TensorFormatError(f"{source}: truncated header ({len(blob)} bytes)")
    magic, version, *shape = _HEADER.unpack_from(blob)
    if magic != FORMAT.TENSOR_MAGIC:
        raise TensorFormatError(f"{source}: bad magic {magic!r}")
    if version != FORMAT.TENSOR_VERSION:
        raise TensorFormatError(f"{source}: unsupported version {version}")
    expected = int(np.prod(shape)) * 4
    payload = blob[_HEADER.size :]
    if len(payload) != expected:
        raise TensorFormatError(
            f"{source}: payload is {len(payload)} bytes, shape {tuple(shape)} "
            f"needs {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float32)


def write_tensor(path: str | Path, array: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensor(array))
    return path


def read_tensor(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise TensorFormatError(f"tensor file not found: {path}")
    return decode_tensor(path.read_bytes(), str(path))
