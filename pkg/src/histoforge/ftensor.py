"""FTensor: a minimal binary tensor container used by the CLI pipeline.

Layout (little-endian):
    magic   "FTNS"  (4 bytes)
    version u8 = 1
    dtype   u8      (0=f32, 1=u8, 2=i32)
    ndim    u8
    reserved u8
    dims    ndim x u64
    payload row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FTNS"
VERSION = 1

_DTYPE_CODES = {
    np.dtype("float32"): 0,
    np.dtype("uint8"): 1,
    np.dtype("int32"): 2,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def write_ftensor(path: str | Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported dtype {arr.dtype}; expected f32, u8 or i32")
    header = MAGIC + struct.pack(
        "<BBBB", VERSION, _DTYPE_CODES[arr.dtype], arr.ndim, 0
    )
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype(arr.dtype.newbyteorder("<")).tobytes())


def read_ftensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an FTensor file (bad magic)")
    version, dtype_code, ndim, _ = struct.unpack("<BBBB", raw[4:8])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported FTensor version {version}")
    if dtype_code not in _CODE_DTYPES:
        raise ValueError(f"{path}: unknown dtype code {dtype_code}")
    dims = struct.unpack(f"<{ndim}Q", raw[8 : 8 + 8 * ndim])
    dtype = _CODE_DTYPES[dtype_code]
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = raw[8 + 8 * ndim :]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload size {len(payload)} != expected {expected}"
        )
    return np.frombuffer(payload, dtype=dtype.newbyteorder("<")).astype(dtype).reshape(dims)
