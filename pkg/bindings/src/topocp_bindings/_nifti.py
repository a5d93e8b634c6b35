"""Minimal NIfTI-1 shims for talking to the core CLI.

Writes little-endian rank-<=3 volumes (float64 likelihoods, uint8 masks) and
reads back the float64 gradient volumes the CLI emits. Deliberately tiny:
just the fields the core's parser checks, nothing else.
"""
import struct

import numpy as np

_HDR_SIZE = 348
_VOX_OFFSET = 352.0
_DT_UINT8 = 2
_DT_FLOAT64 = 64
_BITPIX = {_DT_UINT8: 8, _DT_FLOAT64: 64}


def write(values: np.ndarray, path, spacing=None) -> None:
    arr = np.ascontiguousarray(values)
    if arr.ndim < 1 or arr.ndim > 3:
        raise ValueError(f"rank {arr.ndim} volume not supported")
    if arr.dtype == np.uint8:
        code = _DT_UINT8
    else:
        arr = np.asarray(arr, dtype=np.float64)
        code = _DT_FLOAT64

    dim = [arr.ndim] + list(arr.shape) + [1] * (7 - arr.ndim)
    pixdim = [0.0] + (list(spacing) if spacing else [1.0] * arr.ndim)
    pixdim += [1.0] * (8 - len(pixdim))

    hdr = bytearray(_HDR_SIZE)
    struct.pack_into("<i", hdr, 0, _HDR_SIZE)
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<hh", hdr, 70, code, _BITPIX[code])
    struct.pack_into("<8f", hdr, 76, *pixdim)
    struct.pack_into("<f", hdr, 108, _VOX_OFFSET)
    struct.pack_into("<ff", hdr, 112, 0.0, 0.0)  # slope 0: stored values are real
    hdr[344:348] = b"n+1\0"

    with open(path, "wb") as fh:
        fh.write(bytes(hdr))
        fh.write(b"\0\0\0\0")
        fh.write(arr.tobytes(order="F"))


def read_float64(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HDR_SIZE:
        raise ValueError(f"truncated header in {path}")
    (size,) = struct.unpack_from("<i", blob, 0)
    order = "<" if size == _HDR_SIZE else ">"
    dim = struct.unpack_from(order + "8h", blob, 40)
    code, _ = struct.unpack_from(order + "hh", blob, 70)
    (offset,) = struct.unpack_from(order + "f", blob, 108)
    if code != _DT_FLOAT64:
        raise ValueError(f"expected float64 payload in {path}, datatype {code}")
    shape = tuple(int(d) for d in dim[1 : 1 + dim[0]])
    n = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(blob, dtype=order + "f8", count=n, offset=int(offset))
    return np.asarray(data.reshape(shape, order="F"), dtype=np.float64)
