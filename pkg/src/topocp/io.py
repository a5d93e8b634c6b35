"""Self-contained NIfTI-1 reader/writer for the subset this library emits.

Single-file .nii only, 348-byte headers, datatypes uint8 / int16 / float32 /
float64. Data payloads are Fortran ordered (first dim fastest) as the format
prescribes; arrays cross the boundary as C-ordered numpy views of the same
index convention, so round-trips are bit exact.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParameterError, VolumeIOError
from .grid import BinaryMask, LikelihoodGrid
from .metrics import write_report_csv, write_report_json

HEADER_SIZE = 348
MAGIC_OFFSET = 344
_SWAPPED_SIZEOF_HDR = 1543569408  # 348 seen through reversed byte order

# nifti datatype code -> numpy dtype charcode, bits
_DTYPES = {2: ("u1", 8), 4: ("i2", 16), 16: ("f4", 32), 64: ("f8", 64)}
_CODE_OF = {np.dtype(np.uint8): 2, np.dtype(np.int16): 4,
            np.dtype(np.float32): 16, np.dtype(np.float64): 64}


@dataclass(frozen=True)
class VolumeHeader:
    dims: Tuple[int, ...]
    spacing: Tuple[float, ...]
    datatype: int
    scl_slope: float = 0.0
    scl_inter: float = 0.0
    vox_offset: int = 352
    descrip: str = ""
    byteorder: str = "<"


def _unpack(fmt: str, buf: bytes, offset: int):
    return struct.unpack_from(fmt, buf, offset)


def read_volume(path, kind: str = "auto"):
    """Parse one volume and hand back (grid, header).

    kind selects the wrapper: "auto" gives BinaryMask for exact {0,1} data
    and LikelihoodGrid otherwise, "mask" / "likelihood" force a type, and
    "intensity" returns the raw float64 array for data with no range
    contract (e.g. scanner intensities)."""
    if kind not in ("auto", "mask", "likelihood", "intensity"):
        raise ParameterError(f"unknown read kind {kind!r}")
    p = Path(path)
    try:
        blob = p.read_bytes()
    except OSError as exc:
        raise VolumeIOError(f"cannot read {p}: {exc}", code="NO_FILE") from exc
    if len(blob) < HEADER_SIZE:
        raise VolumeIOError(
            f"{p}: file ends at byte {len(blob)}, header needs {HEADER_SIZE}",
            code="TRUNCATED_HEADER",
        )
    (sizeof_hdr,) = _unpack("<i", blob, 0)
    if sizeof_hdr == HEADER_SIZE:
        bo = "<"
    elif sizeof_hdr == _SWAPPED_SIZEOF_HDR:
        bo = ">"
    else:
        raise VolumeIOError(
            f"{p}: sizeof_hdr at byte 0 is {sizeof_hdr}, not 348 in either byte order",
            code="BAD_SIZEOF_HDR",
        )
    magic = blob[MAGIC_OFFSET : MAGIC_OFFSET + 4]
    if magic != b"n+1\x00":
        raise VolumeIOError(
            f"{p}: magic at byte {MAGIC_OFFSET} is {magic!r}, expected b'n+1\\x00'",
            code="BAD_MAGIC",
        )
    dim = _unpack(bo + "8h", blob, 40)
    rank = dim[0]
    if not (1 <= rank <= 7):
        raise VolumeIOError(f"{p}: dim[0] = {rank} outside [1, 7]", code="BAD_RANK")
    shape = tuple(int(d) for d in dim[1 : 1 + rank])
    if any(d < 1 for d in shape):
        raise VolumeIOError(f"{p}: non-positive dim in {shape}", code="BAD_DIM")
    # tolerate trailing singleton dims (time axes of length 1)
    while len(shape) > 3 and shape[-1] == 1:
        shape = shape[:-1]
    if len(shape) > 3:
        raise VolumeIOError(f"{p}: rank {len(shape)} data unsupported", code="RANK_TOO_HIGH")
    (datatype, bitpix) = _unpack(bo + "hh", blob, 70)
    if datatype not in _DTYPES:
        raise VolumeIOError(f"{p}: datatype code {datatype} unsupported", code="BAD_DATATYPE")
    char, bits = _DTYPES[datatype]
    if bitpix != bits:
        raise VolumeIOError(
            f"{p}: bitpix {bitpix} inconsistent with datatype {datatype}", code="BAD_BITPIX"
        )
    pixdim = _unpack(bo + "8f", blob, 76)
    spacing = tuple(float(abs(s)) if s != 0 else 1.0 for s in pixdim[1 : 1 + len(shape)])
    (vox_offset_f,) = _unpack(bo + "f", blob, 108)
    vox_offset = int(vox_offset_f)
    if vox_offset < HEADER_SIZE:
        raise VolumeIOError(f"{p}: vox_offset {vox_offset} < {HEADER_SIZE}", code="BAD_OFFSET")
    (scl_slope, scl_inter) = _unpack(bo + "ff", blob, 112)
    descrip = blob[148 : 148 + 80].split(b"\x00", 1)[0].decode("ascii", "replace")

    count = int(np.prod(shape))
    need = vox_offset + count * (bits // 8)
    if len(blob) < need:
        raise VolumeIOError(
            f"{p}: payload ends at byte {len(blob)}, needs {need} "
            f"({count} x {bits // 8}-byte voxels at offset {vox_offset})",
            code="TRUNCATED_DATA",
        )
    flat = np.frombuffer(blob, dtype=bo + char, count=count, offset=vox_offset)
    arr = np.ascontiguousarray(flat.reshape(shape, order="F"))

    header = VolumeHeader(
        dims=shape,
        spacing=spacing,
        datatype=datatype,
        scl_slope=float(scl_slope),
        scl_inter=float(scl_inter),
        vox_offset=vox_offset,
        descrip=descrip,
        byteorder=bo,
    )

    apply_scl = scl_slope != 0.0 and not (scl_slope == 1.0 and scl_inter == 0.0)
    values = arr.astype(np.float64)
    if apply_scl:
        values = values * float(scl_slope) + float(scl_inter)

    if kind == "intensity":
        return values, header
    if kind == "mask" or (kind == "auto" and np.isin(values, (0.0, 1.0)).all()):
        if not np.isin(values, (0.0, 1.0)).all():
            raise VolumeIOError(f"{p}: mask volume has values outside {{0, 1}}", code="NOT_BINARY")
        return BinaryMask(values.astype(np.uint8), spacing=spacing), header
    if values.min() < 0.0 or values.max() > 1.0:
        raise VolumeIOError(
            f"{p}: values span [{values.min():g}, {values.max():g}], outside [0, 1]; "
            "read with kind='intensity' for unconstrained data",
            code="VALUE_RANGE",
        )
    return LikelihoodGrid(values, spacing=spacing), header


def _pad_shape(shape: Sequence[int]) -> Tuple[int, ...]:
    out = [1] * 8
    out[0] = len(shape)
    for i, d in enumerate(shape):
        out[1 + i] = int(d)
    return tuple(out)


def write_volume(
    data: Union[LikelihoodGrid, BinaryMask, np.ndarray],
    path,
    spacing: Optional[Sequence[float]] = None,
    descrip: str = "",
) -> VolumeHeader:
    """Write a single-file .nii. LikelihoodGrid -> float32, BinaryMask ->
    uint8, bare float arrays (e.g. gradients) -> float64. Payload starts at
    byte 352; no scaling is encoded (slope 0)."""
    if isinstance(data, LikelihoodGrid):
        arr = data.values.astype(np.float32)
        spacing = spacing or data.spacing
    elif isinstance(data, BinaryMask):
        arr = data.values.astype(np.uint8)
        spacing = spacing or data.spacing
    else:
        arr = np.asarray(data)
        if arr.dtype not in _CODE_OF:
            arr = arr.astype(np.float64)
    if arr.ndim < 1 or arr.ndim > 3:
        raise ParameterError(f"can only write rank 1-3 volumes, got rank {arr.ndim}")
    spacing = tuple(float(s) for s in (spacing or (1.0,) * arr.ndim))
    if len(spacing) != arr.ndim:
        raise ParameterError(f"spacing rank {len(spacing)} != volume rank {arr.ndim}")
    datatype = _CODE_OF[arr.dtype]
    char, bits = _DTYPES[datatype]

    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    struct.pack_into("<8h", hdr, 40, *_pad_shape(arr.shape))
    struct.pack_into("<hh", hdr, 70, datatype, bits)
    pixdim = [1.0] * 8
    pixdim[0] = 1.0
    for i, s in enumerate(spacing):
        pixdim[1 + i] = s
    struct.pack_into("<8f", hdr, 76, *pixdim)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<ff", hdr, 112, 0.0, 0.0)  # slope 0: stored values are final
    raw_desc = descrip.encode("ascii", "replace")[:79]
    hdr[148 : 148 + len(raw_desc)] = raw_desc
    struct.pack_into("<4s", hdr, MAGIC_OFFSET, b"n+1\x00")

    payload = np.asfortranarray(arr).tobytes(order="F")
    blob = bytes(hdr) + b"\x00\x00\x00\x00" + payload
    Path(path).write_bytes(blob)
    return VolumeHeader(
        dims=arr.shape, spacing=spacing, datatype=datatype, vox_offset=352, descrip=descrip
    )


def write_report(reports, path, format: str = "json") -> None:
    """Serialize MetricsReport rows; format is "json" or "csv"."""
    if format == "json":
        write_report_json(reports, path)
    elif format == "csv":
        write_report_csv(reports, path)
    else:
        raise ParameterError(f"unknown report format {format!r}")
