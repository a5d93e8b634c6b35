"""Grid containers, padding, thresholding, standardization, connectivity.

Conventions used across the toolkit:

* grids are numpy arrays of rank 2 or 3, C-contiguous, indexed row-major;
* likelihoods are float64 in [0, 1], masks are uint8 in {0, 1};
* foreground connectivity is the full neighborhood (8-adjacency in 2D,
  26 in 3D), background connectivity the face neighborhood (4 / 6).
  The pair is dual: it is the topology induced by treating pixels as
  top-dimensional cells of a cubical complex, and it avoids the classic
  paradox where a digital ring both is and is not a loop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError

__all__ = [
    "Connectivity",
    "CONNECTIVITY",
    "LikelihoodGrid",
    "BinaryMask",
    "pad_twice",
    "threshold",
    "standardize",
    "foreground_structure",
    "background_structure",
]

CONSTANT_VARIANCE_EPS = 1e-12


@dataclass(frozen=True)
class Connectivity:
    """The dual adjacency pair; fixed, exposed so the choice is auditable."""

    foreground: str = "full"
    background: str = "face"


CONNECTIVITY = Connectivity()


def foreground_structure(rank: int) -> np.ndarray:
    """Structuring element for foreground components (8/26-adjacency)."""
    return np.ones((3,) * rank, dtype=bool)


def background_structure(rank: int) -> np.ndarray:
    """Structuring element for background components (4/6-adjacency)."""
    return ndimage.generate_binary_structure(rank, 1)


def _check_rank(values: np.ndarray) -> None:
    if values.ndim not in (2, 3):
        raise ParameterError(f"grid rank must be 2 or 3, got {values.ndim}")
    if min(values.shape) < 1:
        raise ParameterError(f"every extent must be >= 1, got shape {values.shape}")


def _check_spacing(spacing: tuple, rank: int) -> tuple:
    if spacing is None:
        return (1.0,) * rank
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != rank or any(s <= 0 for s in spacing):
        raise ParameterError(f"spacing must be {rank} positive values, got {spacing}")
    return spacing


@dataclass(frozen=True)
class LikelihoodGrid:
    """Real-valued grid f in [0,1]; a 2D patch or 3D volume of likelihoods."""

    values: np.ndarray
    spacing: tuple = field(default=None)

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        _check_rank(values)
        lo, hi = float(values.min()), float(values.max())
        if lo < 0.0 or hi > 1.0:
            raise ParameterError(
                f"likelihood values must lie in [0,1], got range [{lo}, {hi}]"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing, values.ndim))

    @property
    def dims(self) -> tuple:
        return self.values.shape

    @property
    def rank(self) -> int:
        return self.values.ndim


@dataclass(frozen=True)
class BinaryMask:
    """{0,1} grid: segmentation labels and thresholded filtration levels."""

    values: np.ndarray
    spacing: tuple = field(default=None)

    def __post_init__(self):
        raw = np.asarray(self.values)
        if raw.dtype == bool:
            values = raw.astype(np.uint8)
        else:
            values = np.ascontiguousarray(raw.astype(np.uint8, casting="unsafe"))
            if not np.array_equal(values, raw):
                raise ParameterError("mask values must be exactly 0 or 1")
        _check_rank(values)
        if values.max(initial=0) > 1:
            raise ParameterError("mask values must be exactly 0 or 1")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing, values.ndim))

    @property
    def dims(self) -> tuple:
        return self.values.shape

    @property
    def rank(self) -> int:
        return self.values.ndim

    def as_bool(self) -> np.ndarray:
        return self.values.astype(bool)

    def as_likelihood(self) -> "LikelihoodGrid":
        return LikelihoodGrid(self.values.astype(np.float64), self.spacing)


def values_of(grid) -> np.ndarray:
    """Accept a container or a bare ndarray and return the value array."""
    if isinstance(grid, (LikelihoodGrid, BinaryMask)):
        return grid.values
    return np.ascontiguousarray(np.asarray(grid))


def spacing_of(grid, rank: int) -> tuple:
    if isinstance(grid, (LikelihoodGrid, BinaryMask)):
        return grid.spacing
    return (1.0,) * rank


def pad_twice(grid):
    """Pad with the grid maximum, then with zeros (one cell each, so +4 per axis).

    The max ring closes structures that touch the border; the zero ring
    defines a background floor so every structure eventually dies at 0.
    Returns the same container type as the input.
    """
    values = values_of(grid)
    _check_rank(values)
    vmax = values.max()
    inner = np.pad(values, 1, mode="constant", constant_values=vmax)
    outer = np.pad(inner, 1, mode="constant", constant_values=0)
    if isinstance(grid, LikelihoodGrid):
        return LikelihoodGrid(outer, grid.spacing)
    if isinstance(grid, BinaryMask):
        return BinaryMask(outer, grid.spacing)
    return outer


def threshold(grid, gamma: float) -> BinaryMask:
    """Binarize: cell = 1 iff value >= gamma. Dims and spacing preserved."""
    values = values_of(grid)
    _check_rank(values)
    mask = (values >= gamma).astype(np.uint8)
    return BinaryMask(mask, spacing_of(grid, values.ndim))


def standardize(values: np.ndarray) -> tuple[np.ndarray, bool]:
    """Shift/scale to mean 0 and population variance 1.

    Constant inputs (variance below 1e-12) map to all zeros with the
    returned flag set, so masked-out regions never abort a pipeline.
    """
    values = np.asarray(values, dtype=np.float64)
    var = float(values.var())
    if var < CONSTANT_VARIANCE_EPS:
        return np.zeros_like(values), True
    return (values - values.mean()) / np.sqrt(var), False
