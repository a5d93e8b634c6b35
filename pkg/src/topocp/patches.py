"""Multiview patch extraction and overlap-averaged reaggregation.

Axis names map to array axes of RAS-like volumes: sagittal = axis 0,
coronal = axis 1, axial = axis 2. A patch is a 2D window of the in-plane
axes in row-major order at a stride-aligned origin; the final window per
row/column is clamped to the mask bounding-box edge so coverage is complete.
"""
from __future__ import annotations

import json
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from .errors import ParameterError, VolumeIOError
from .grid import BinaryMask, LikelihoodGrid, standardize

AXIS_TO_DIM = {"sagittal": 0, "coronal": 1, "axial": 2}
DEFAULT_AXES = ("axial", "coronal", "sagittal")


@dataclass(frozen=True)
class PatchSpec:
    size: int = 64
    stride: int = 16
    axes: Tuple[str, ...] = DEFAULT_AXES

    def __post_init__(self):
        if not (1 <= self.stride <= self.size):
            raise ParameterError(
                f"stride must lie in [1, size], got stride={self.stride} size={self.size}"
            )
        axes = tuple(self.axes)
        if not axes or any(a not in AXIS_TO_DIM for a in axes):
            raise ParameterError(f"axes must be a non-empty subset of {tuple(AXIS_TO_DIM)}")
        object.__setattr__(self, "axes", axes)


@dataclass(frozen=True)
class PatchRecord:
    """One 2D tile. data is float64; standardized intensities are not
    confined to [0,1], predicted likelihoods are."""

    axis: str
    slice_index: int
    origin: Tuple[int, int]
    data: np.ndarray
    constant: bool = False


def _origins(lo: int, end: int, size: int, stride: int) -> List[int]:
    """Stride offsets covering [lo, end); the last window is clamped to the
    right edge. A span smaller than the window gets a single origin clamped
    toward zero (extraction pads)."""
    if end - lo >= size:
        xs = list(range(lo, end - size + 1, stride))
        if xs[-1] + size < end:
            xs.append(end - size)
        return xs
    return [max(0, min(lo, end - size))]


def _window(plane: np.ndarray, x0: int, y0: int, size: int) -> np.ndarray:
    h, w = plane.shape
    out = np.zeros((size, size), dtype=np.float64)
    xs = slice(x0, min(x0 + size, h))
    ys = slice(y0, min(y0 + size, w))
    out[: xs.stop - xs.start, : ys.stop - ys.start] = plane[xs, ys]
    return out


def extract_patches(
    vol: np.ndarray,
    brain_mask,
    spec: PatchSpec = PatchSpec(),
    *,
    standardize_patches: bool = True,
) -> Iterator[PatchRecord]:
    """Yield patches over every mask-intersecting slice of each axis.

    Voxels outside the brain mask are zeroed first. Each patch is
    standardized to zero mean / unit variance (constant patches become
    zeros and are flagged); pass ``standardize_patches=False`` to stream
    raw window values, e.g. when tiling a likelihood volume."""
    vol = np.asarray(vol, dtype=np.float64)
    mask = (brain_mask.values if isinstance(brain_mask, BinaryMask) else np.asarray(brain_mask)) != 0
    if vol.ndim != 3:
        raise ParameterError(f"patch extraction needs a rank-3 volume, got rank {vol.ndim}")
    if vol.shape != mask.shape:
        raise ParameterError(f"shape mismatch: volume {vol.shape} vs mask {mask.shape}")
    if not mask.any():
        warnings.warn("brain mask is empty; no patches extracted", stacklevel=2)
        return
    masked = np.where(mask, vol, 0.0)

    for axis in spec.axes:
        dim = AXIS_TO_DIM[axis]
        in_plane = tuple(d for d in range(3) if d != dim)
        for slice_index in range(vol.shape[dim]):
            msl = np.take(mask, slice_index, axis=dim)
            if not msl.any():
                continue
            plane = np.take(masked, slice_index, axis=dim)
            rows = np.flatnonzero(msl.any(axis=1))
            cols = np.flatnonzero(msl.any(axis=0))
            for x0 in _origins(int(rows[0]), int(rows[-1]) + 1, spec.size, spec.stride):
                for y0 in _origins(int(cols[0]), int(cols[-1]) + 1, spec.size, spec.stride):
                    data = _window(plane, x0, y0, spec.size)
                    constant = False
                    if standardize_patches:
                        data, constant = standardize(data)
                    yield PatchRecord(
                        axis=axis,
                        slice_index=slice_index,
                        origin=(x0, y0),
                        data=data,
                        constant=constant,
                    )


def aggregate(
    predictions: Iterable[PatchRecord],
    vol_dims: Sequence[int],
    n_models: int = 1,
) -> Tuple[LikelihoodGrid, BinaryMask]:
    """Per-voxel mean of all covering likelihood patches; decision mask is
    mean >= 0.5. Uncovered voxels get likelihood 0 and label 0.

    n_models documents how many model outputs the stream interleaves; the
    mean over the combined coverage already realizes the summed-likelihood
    vote, so the value does not change the arithmetic."""
    dims = tuple(int(d) for d in vol_dims)
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise ParameterError(f"vol_dims must be three positive sizes, got {vol_dims!r}")
    if n_models < 1:
        raise ParameterError("n_models must be >= 1")
    sums = np.zeros(dims, dtype=np.float64)
    counts = np.zeros(dims, dtype=np.int64)

    for rec in predictions:
        if rec.axis not in AXIS_TO_DIM:
            raise ParameterError(f"unknown patch axis {rec.axis!r}")
        dim = AXIS_TO_DIM[rec.axis]
        if not (0 <= rec.slice_index < dims[dim]):
            raise ParameterError(
                f"patch slice {rec.slice_index} outside volume axis {dim} of size {dims[dim]}"
            )
        in_plane = tuple(d for d in range(3) if d != dim)
        h, w = dims[in_plane[0]], dims[in_plane[1]]
        x0, y0 = rec.origin
        px, py = rec.data.shape
        if x0 < 0 or y0 < 0:
            raise ParameterError(f"negative patch origin {rec.origin}")
        # windows may overhang when a slice is smaller than the patch size;
        # the overhang is padding and is ignored
        xs = min(px, h - x0)
        ys = min(py, w - y0)
        if xs <= 0 or ys <= 0:
            raise ParameterError(f"patch footprint {rec.origin} outside slice {h}x{w}")
        idx = [slice(None)] * 3
        idx[dim] = rec.slice_index
        idx[in_plane[0]] = slice(x0, x0 + xs)
        idx[in_plane[1]] = slice(y0, y0 + ys)
        sums[tuple(idx)] += rec.data[:xs, :ys]
        counts[tuple(idx)] += 1

    covered = counts > 0
    if not covered.any():
        warnings.warn("no coverage: aggregation yields all background", stacklevel=2)
    mean = np.zeros(dims, dtype=np.float64)
    np.divide(sums, counts, out=mean, where=covered)
    mean = np.clip(mean, 0.0, 1.0)
    mask = (mean >= 0.5) & covered
    return LikelihoodGrid(mean), BinaryMask(mask.astype(np.uint8))


def write_patch_dir(
    records: Iterable[PatchRecord],
    path,
    vol_dims: Sequence[int],
    spacing: Sequence[float] = (1.0, 1.0, 1.0),
) -> int:
    """Serialize patches as little-endian float32 row-major tiles plus a
    JSON index carrying placement and checksums. Returns the tile count."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rec in enumerate(records):
        raw = np.ascontiguousarray(rec.data, dtype="<f4").tobytes()
        name = f"{i:06d}.raw"
        (root / name).write_bytes(raw)
        entries.append(
            {
                "file": name,
                "axis": rec.axis,
                "slice_index": rec.slice_index,
                "origin": list(rec.origin),
                "shape": list(rec.data.shape),
                "crc32": zlib.crc32(raw),
                "constant": rec.constant,
            }
        )
    index = {
        "vol_dims": [int(d) for d in vol_dims],
        "spacing": [float(s) for s in spacing],
        "patches": entries,
    }
    (root / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    return len(entries)


def read_patch_dir(path) -> Tuple[List[PatchRecord], Tuple[int, ...], Tuple[float, ...]]:
    root = Path(path)
    index_path = root / "index.json"
    if not index_path.is_file():
        raise VolumeIOError(f"missing patch index {index_path}", code="NO_INDEX")
    try:
        index = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise VolumeIOError(f"corrupt patch index: {exc}", code="BAD_INDEX") from exc
    records = []
    for entry in index.get("patches", []):
        tile = root / entry["file"]
        if not tile.is_file():
            raise VolumeIOError(f"missing tile {tile}", code="NO_TILE")
        raw = tile.read_bytes()
        if zlib.crc32(raw) != entry["crc32"]:
            raise VolumeIOError(f"checksum mismatch in {tile}", code="BAD_CRC")
        shape = tuple(entry["shape"])
        expect = int(np.prod(shape)) * 4
        if len(raw) != expect:
            raise VolumeIOError(
                f"tile {tile} has {len(raw)} bytes, expected {expect}", code="BAD_SIZE"
            )
        data = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
        records.append(
            PatchRecord(
                axis=entry["axis"],
                slice_index=int(entry["slice_index"]),
                origin=tuple(entry["origin"]),
                data=data,
                constant=bool(entry.get("constant", False)),
            )
        )
    dims = tuple(index.get("vol_dims", ()))
    spacing = tuple(index.get("spacing", (1.0,) * len(dims)))
    return records, dims, spacing
