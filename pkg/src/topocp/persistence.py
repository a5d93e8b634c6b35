"""Cubical persistent homology of likelihood grids.

A structure visible in ``threshold(f, gamma)`` for gamma in ``(birth, death]``
contributes the pair ``(birth, death)``: death is where it first appears as
gamma sweeps downward, birth where it merges or fills in. Binary inputs
therefore produce pairs at exactly (0, 1).

Dim-0 pairs come from union-find over pixels in descending-value order.
The top nontrivial dimension (1 in 2D, 2 in 3D) uses union-find on the
complement, exact for the dual connectivity pair. 3D dim-1 pairs come from
boundary-matrix reduction with clearing over the bitmap cubical complex.
All routes share one tie-break: ascending row-major index among equal values,
so diagrams are bit-reproducible.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from . import _engine
from .errors import ParameterError
from .grid import (
    BinaryMask,
    LikelihoodGrid,
    background_structure,
    foreground_structure,
    pad_twice,
    values_of,
)

Coord = Tuple[int, ...]


@dataclass(frozen=True)
class BettiVector:
    """Betti numbers of a mask: components, holes/tunnels, cavities."""

    bn0: int
    bn1: int
    bn2: int = 0

    def __post_init__(self):
        if min(self.bn0, self.bn1, self.bn2) < 0:
            raise ParameterError("Betti numbers must be non-negative")

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.bn0, self.bn1, self.bn2)

    def __getitem__(self, k: int) -> int:
        return self.as_tuple()[k]

    def __iter__(self):
        return iter(self.as_tuple())


@dataclass(frozen=True)
class PersistencePair:
    """One bar: alive in the thresholded grid for gamma in (birth, death].

    birth_cell holds the coordinate whose value equals birth (merge or fill
    site); death_cell the coordinate whose value equals death (appearance
    site). The one essential component per grid has its birth floored to 0
    with birth_cell None.
    """

    dim: int
    birth: float
    death: float
    birth_cell: Optional[Coord]
    death_cell: Coord

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass
class PersistenceDiagram:
    """Pairs grouped by dimension, each group sorted by descending
    persistence with ties broken by (birth, death, birth_cell row-major)."""

    shape: Tuple[int, ...]
    mp: float
    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray
    birth_cells: np.ndarray  # flat row-major indices, -1 for the essential pair
    death_cells: np.ndarray
    _pair_cache: Optional[Tuple[PersistencePair, ...]] = field(
        default=None, repr=False, compare=False
    )

    def __len__(self) -> int:
        return int(self.dims.shape[0])

    def arrays(self, k: int):
        """(births, deaths, birth_cells, death_cells) views for dimension k."""
        sel = self.dims == k
        return (
            self.births[sel],
            self.deaths[sel],
            self.birth_cells[sel],
            self.death_cells[sel],
        )

    @property
    def pairs(self) -> Tuple[PersistencePair, ...]:
        if self._pair_cache is None:
            out = []
            for t in range(len(self)):
                bc = int(self.birth_cells[t])
                out.append(
                    PersistencePair(
                        dim=int(self.dims[t]),
                        birth=float(self.births[t]),
                        death=float(self.deaths[t]),
                        birth_cell=(
                            None
                            if bc < 0
                            else tuple(
                                int(v) for v in np.unravel_index(bc, self.shape)
                            )
                        ),
                        death_cell=tuple(
                            int(v)
                            for v in np.unravel_index(
                                int(self.death_cells[t]), self.shape
                            )
                        ),
                    )
                )
            self._pair_cache = tuple(out)
        return self._pair_cache

    def in_dimension(self, k: int) -> Tuple[PersistencePair, ...]:
        return tuple(p for p in self.pairs if p.dim == k)

    def betti_at(self, gamma: float) -> BettiVector:
        alive = (self.births < gamma) & (gamma <= self.deaths)
        counts = [int(np.count_nonzero(alive & (self.dims == k))) for k in range(3)]
        return BettiVector(*counts)


def _diagram_from_parts(shape, mp, parts):
    """parts: list of (dim, births, deaths, bcells, dcells) arrays."""
    dims = np.concatenate(
        [np.full(b.shape[0], d, dtype=np.int8) for d, b, _, _, _ in parts]
    )
    births = np.concatenate([b for _, b, _, _, _ in parts])
    deaths = np.concatenate([dd for _, _, dd, _, _ in parts])
    bcells = np.concatenate([bc for _, _, _, bc, _ in parts])
    dcells = np.concatenate([dc for _, _, _, _, dc in parts])

    keep = (deaths - births) > mp
    dims, births, deaths = dims[keep], births[keep], deaths[keep]
    bcells, dcells = bcells[keep], dcells[keep]

    order = np.lexsort((bcells, deaths, births, -(deaths - births), dims))
    return PersistenceDiagram(
        shape=shape,
        mp=mp,
        dims=dims[order],
        births=births[order],
        deaths=deaths[order],
        birth_cells=bcells[order],
        death_cells=dcells[order],
    )


def compute_persistence(
    f: Union[LikelihoodGrid, np.ndarray],
    mp: float = 0.0,
    *,
    pad_input: bool = False,
) -> PersistenceDiagram:
    """All k-dimensional pairs (k < rank) with persistence > mp.

    The grid is used as given; zero borders are implicit, so surrounding a
    grid with zeros does not change the result. ``pad_input=True`` first
    applies :func:`pad_twice` and reports cells in padded coordinates, which
    adds the boundary classes of the high-valued inner ring.
    """
    if not (0.0 <= mp < 1.0):
        raise ParameterError(f"mp must lie in [0, 1), got {mp!r}")
    if pad_input:
        f = pad_twice(f)
    grid = f if isinstance(f, LikelihoodGrid) else LikelihoodGrid(np.asarray(f))
    values = np.ascontiguousarray(grid.values, dtype=np.float64)

    order_of, pixel_at = _engine.superlevel_order(values)
    order2_of, pixel_at2 = _engine.sublevel_order(values)

    parts = []
    if values.ndim == 2:
        b0 = _engine.uf0_2d(values, order_of, pixel_at)
        b1 = _engine.dual_uf_2d(values, order2_of, pixel_at2)
        parts.append((0, *b0))
        parts.append((1, *b1))
    else:
        b0 = _engine.uf0_3d(values, order_of, pixel_at)
        parts.append((0, *b0))
        cell_rank, edge_owner, face_owner, face_flat, _, n_faces = (
            _engine.build_cells_3d(values, order_of)
        )
        pos_face, *d2 = _engine.reduce_d3(
            values, pixel_at, cell_rank, face_owner, n_faces
        )
        d1 = _engine.reduce_d2(
            values, pixel_at, cell_rank, face_flat, face_owner, edge_owner, pos_face
        )
        parts.append((1, *d1))
        parts.append((2, *d2))

    # the grid is connected under full adjacency, so exactly one component
    # survives the sweep; floor its birth at 0 with no birth cell
    root = int(pixel_at[0])
    ess_death = float(values.ravel()[root])
    parts.append(
        (
            0,
            np.array([0.0]),
            np.array([ess_death]),
            np.array([-1], dtype=np.int64),
            np.array([root], dtype=np.int64),
        )
    )
    return _diagram_from_parts(values.shape, float(mp), parts)


def _euler_characteristic(mask: np.ndarray) -> int:
    """Euler characteristic of the cubical complex spanned by the mask.

    A cell of any dimension is present iff at least one incident pixel is
    foreground (closure of the top cells)."""
    m = mask.astype(bool)
    rank = m.ndim
    padded = np.pad(m, 1)

    def count(present_axes):
        # cells spanning the axes in present_axes; others are vertex-like
        shape = tuple(
            m.shape[ax] if ax in present_axes else m.shape[ax] + 1
            for ax in range(rank)
        )
        acc = np.zeros(shape, dtype=bool)
        deltas = [(0,) if ax in present_axes else (0, 1) for ax in range(rank)]
        for offs in product(*deltas):
            sl = tuple(
                slice(1, 1 + m.shape[ax])
                if ax in present_axes
                else slice(offs[ax], offs[ax] + shape[ax])
                for ax in range(rank)
            )
            acc |= padded[sl]
        return int(acc.sum())

    chi = 0
    for d in range(rank + 1):
        sign = 1 if d % 2 == 0 else -1
        for axes in combinations(range(rank), d):
            chi += sign * count(set(axes))
    return chi


def _bbox_core(mask: np.ndarray) -> np.ndarray:
    """Crop to the foreground bounding box plus a 1-cell margin (clipped)."""
    rank = mask.ndim
    slices = []
    for ax in range(rank):
        other = tuple(a for a in range(rank) if a != ax)
        proj = mask.any(axis=other)
        nz = np.flatnonzero(proj)
        slices.append(slice(max(int(nz[0]) - 1, 0), min(int(nz[-1]) + 2, mask.shape[ax])))
    return mask[tuple(slices)]


def betti_numbers(m: Union[BinaryMask, np.ndarray]) -> BettiVector:
    """Betti numbers of the foreground: full adjacency for the foreground,
    face adjacency for the enclosed background (the dual pair)."""
    mask = (m.values if isinstance(m, BinaryMask) else np.asarray(m)) != 0
    if mask.ndim not in (2, 3):
        raise ParameterError(f"rank {mask.ndim} mask not supported")
    if not mask.any():
        return BettiVector(0, 0, 0)
    core = _bbox_core(mask)
    rank = core.ndim

    _, bn0 = ndimage.label(core, structure=foreground_structure(rank))
    bg_labels, n_bg = ndimage.label(~core, structure=background_structure(rank))
    border = set()
    for ax in range(rank):
        for side in (0, -1):
            face = np.take(bg_labels, side, axis=ax)
            border.update(np.unique(face[face > 0]).tolist())
    enclosed = n_bg - len(border)

    if rank == 2:
        return BettiVector(bn0, enclosed, 0)
    chi = _euler_characteristic(core)
    bn2 = enclosed
    bn1 = bn0 + bn2 - chi
    return BettiVector(bn0, bn1, bn2)


def write_diagram_csv(diagram: PersistenceDiagram, path) -> None:
    """Columns dim,birth,death,birth_cell,death_cell; coordinates joined
    with semicolons, empty birth_cell for the essential pair."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dim", "birth", "death", "birth_cell", "death_cell"])
        for pair in diagram.pairs:
            bc = "" if pair.birth_cell is None else ";".join(
                str(v) for v in pair.birth_cell
            )
            dc = ";".join(str(v) for v in pair.death_cell)
            writer.writerow([pair.dim, repr(pair.birth), repr(pair.death), bc, dc])
