"""Deterministic fixture generators shared by tests, demos, and the CLI.

Everything here is seeded or fully constructive so repeated generation is
bit-identical. The shell / slab constructions pick their defect sites so the
expected Betti numbers and voxel counts are exact small integers; tests
freeze those values rather than recomputing them.
"""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .grid import BinaryMask, LikelihoodGrid
from .io import write_volume

BG = 0.05
FG = 0.9
GAP = 0.2


def ring_mask() -> BinaryMask:
    """8x8 one-cell-thick square ring: BN = (1, 1, 0)."""
    m = np.zeros((8, 8), dtype=np.uint8)
    m[2:6, 2:6] = 1
    m[3:5, 3:5] = 0
    return BinaryMask(m)


def two_blobs_mask() -> BinaryMask:
    m = np.zeros((7, 7), dtype=np.uint8)
    m[1:3, 1:3] = 1
    m[4:6, 4:6] = 1
    return BinaryMask(m)


def hollow_cube_mask() -> BinaryMask:
    """5^3 grid, 3^3 shell around one empty voxel: BN = (1, 0, 1)."""
    m = np.zeros((5, 5, 5), dtype=np.uint8)
    m[1:4, 1:4, 1:4] = 1
    m[2, 2, 2] = 0
    return BinaryMask(m)


def solid_torus_mask() -> BinaryMask:
    """Square annulus extruded through 3 slices: BN = (1, 1, 0)."""
    m = np.zeros((7, 7, 3), dtype=np.uint8)
    m[1:6, 1:6, :] = 1
    m[2:5, 2:5, :] = 0
    return BinaryMask(m)


def loss_ring() -> Tuple[LikelihoodGrid, BinaryMask]:
    """7x7 annulus target and a likelihood whose ring has one weak cell.

    The weak cell (1,3) at 0.4 is where the hole's enclosure is thinnest,
    so it carries the dim-1 death and receives the topology gradient."""
    t = np.zeros((7, 7), dtype=np.uint8)
    t[1:6, 1:6] = 1
    t[2:5, 2:5] = 0
    f = np.full((7, 7), BG)
    f[t == 1] = FG
    f[1, 3] = 0.4
    return LikelihoodGrid(f), BinaryMask(t)


def _ring_cells(n: int) -> np.ndarray:
    """Boolean n x n picture of the demo ring: perimeter of [16, 48)^2."""
    m = np.zeros((n, n), dtype=bool)
    m[16:48, 16] = True
    m[16:48, 47] = True
    m[16, 16:48] = True
    m[47, 16:48] = True
    return m


def broken_ring_demo(n: int = 64) -> Tuple[LikelihoodGrid, BinaryMask, BinaryMask]:
    """(init, clean target, noisy target) for the hole-repair demo.

    init: ring at 0.9 with one gap cell at 0.2 over 0.05 background, so the
    0.5 mask is an open arc (BN1 = 0). clean: the closed ring. noisy: the
    closed ring plus 30 isolated speck cells scattered off-ring."""
    ring = _ring_cells(n)
    f = np.full((n, n), BG)
    f[ring] = FG
    f[16, 32] = GAP
    clean = ring.copy()
    noisy = ring.copy()
    rng = np.random.default_rng(7)
    placed = []
    while len(placed) < 30:
        i, j = int(rng.integers(2, n - 2)), int(rng.integers(2, n - 2))
        if 12 <= i <= 51 and 12 <= j <= 51:
            continue  # keep specks clear of the ring block
        if any(max(abs(i - a), abs(j - b)) < 3 for a, b in placed):
            continue
        placed.append((i, j))
        noisy[i, j] = True
    return (
        LikelihoodGrid(f),
        BinaryMask(clean.astype(np.uint8)),
        BinaryMask(noisy.astype(np.uint8)),
    )


def shell_pair(kind: str = "channel") -> Tuple[BinaryMask, BinaryMask]:
    """(pred, gt) on a 7^3 shell with 316 foreground voxels.

    kind="channel" bores a 1x1 through-channel along axis 0 (4 missing
    voxels, BN1 = 1); kind="dent" removes a single surface voxel (1 missing,
    topology unchanged)."""
    gt = np.ones((7, 7, 7), dtype=np.uint8)
    gt[2:5, 2:5, 2:5] = 0
    pred = gt.copy()
    if kind == "channel":
        pred[:, 3, 3] = 0
    elif kind == "dent":
        pred[0, 3, 3] = 0
    else:
        raise ValueError(f"unknown shell kind {kind!r}")
    return BinaryMask(pred), BinaryMask(gt)


def slab_pair() -> Tuple[BinaryMask, BinaryMask, BinaryMask]:
    """(pred_one_big, pred_four_small, gt) on a solid 13x13x5 slab.

    pred_one_big punches a single 3x3 through-hole (45 voxels, BN1 = 1);
    pred_four_small punches four 1x1 through-holes (20 voxels, BN1 = 4).
    The pair with MORE missing volume has FEWER holes."""
    gt = np.ones((13, 13, 5), dtype=np.uint8)
    a = gt.copy()
    a[5:8, 5:8, :] = 0
    b = gt.copy()
    for r, c in ((4, 4), (4, 8), (8, 4), (8, 8)):
        b[r, c, :] = 0
    return BinaryMask(a), BinaryMask(b), BinaryMask(gt)


def random_grid(seed: int, shape: Tuple[int, ...]) -> LikelihoodGrid:
    """Values drawn uniformly from {0.1, 0.2, ..., 0.9}: plenty of ties."""
    rng = np.random.default_rng(seed)
    return LikelihoodGrid(rng.integers(1, 10, size=shape) / 10.0)


def random_mask(seed: int, shape: Tuple[int, ...], p: float = 0.45) -> BinaryMask:
    rng = np.random.default_rng(seed)
    return BinaryMask((rng.random(shape) < p).astype(np.uint8))


def distinct_grid(seed: int, shape: Tuple[int, ...]) -> LikelihoodGrid:
    """All cell values pairwise >= 2.5e-3 apart, so +-1e-4 finite-difference
    probes never reorder the filtration."""
    rng = np.random.default_rng(seed)
    n = int(np.prod(shape))
    vals = 0.05 + rng.permutation(n) * 2.5e-3
    if vals.max() > 1.0:
        raise ValueError(f"shape {shape} too large for the distinct-value ladder")
    return LikelihoodGrid(vals.reshape(shape))


def masked_volume(seed: int, shape: Tuple[int, int, int] = (40, 40, 40)):
    """(likelihood volume, brain mask) pair for pipeline round-trips.

    Values are multiples of 1/64 so the float32 tile encoding is lossless
    and the 0.5 decision boundary is exact."""
    rng = np.random.default_rng(seed)
    vol = rng.integers(0, 65, size=shape) / 64.0
    center = np.array(shape) / 2.0 - 0.5
    grids = np.indices(shape)
    d2 = sum((g - c) ** 2 for g, c in zip(grids, center))
    mask = d2 <= 14.0**2
    return LikelihoodGrid(vol), BinaryMask(mask.astype(np.uint8))


def intensity_volume(shape: Tuple[int, int, int] = (100, 100, 100)):
    """Synthetic scanner-like volume plus an ellipsoid brain mask."""
    rng = np.random.default_rng(11)
    vol = rng.normal(120.0, 30.0, size=shape)
    center = np.array(shape) / 2.0 - 0.5
    grids = np.indices(shape)
    d2 = sum(((g - c) / (0.42 * s)) ** 2 for g, c, s in zip(grids, center, shape))
    mask = d2 <= 1.0
    return vol, BinaryMask(mask.astype(np.uint8))


def eval128() -> Tuple[BinaryMask, BinaryMask]:
    """128^3 evaluation pair: thick shell ground truth, prediction with two
    square through-channels bored along axis 2."""
    gt = np.zeros((128, 128, 128), dtype=np.uint8)
    gt[32:96, 32:96, 32:96] = 1
    gt[40:88, 40:88, 40:88] = 0
    pred = gt.copy()
    pred[47:50, 47:50, 32:96] = 0
    pred[71:74, 71:74, 32:96] = 0
    return BinaryMask(pred), BinaryMask(gt)


def fixture_set() -> Dict[str, object]:
    """Everything gen-fixtures writes, keyed by file stem."""
    pred_f, target_m = loss_ring()
    init, clean, noisy = broken_ring_demo()
    ch_pred, ch_gt = shell_pair("channel")
    dn_pred, _ = shell_pair("dent")
    slab_a, slab_b, slab_gt = slab_pair()
    out: Dict[str, object] = {
        "ring": ring_mask(),
        "two_blobs": two_blobs_mask(),
        "hollow_cube": hollow_cube_mask(),
        "torus": solid_torus_mask(),
        "loss_pred": pred_f,
        "loss_target": target_m,
        "demo_init": init,
        "demo_target": clean,
        "demo_noisy": noisy,
        "shell_gt": ch_gt,
        "shell_channel": ch_pred,
        "shell_dent": dn_pred,
        "slab_gt": slab_gt,
        "slab_one_big": slab_a,
        "slab_four_small": slab_b,
    }
    # float64 random pairs for cross-package parity checks
    out["rand2d_pred"] = LikelihoodGrid(random_grid(101, (9, 9)).values)
    out["rand2d_gt"] = random_mask(102, (9, 9))
    out["rand3d_pred"] = LikelihoodGrid(random_grid(103, (6, 6, 6)).values)
    out["rand3d_gt"] = random_mask(104, (6, 6, 6))
    return out


def write_fixture_set(outdir) -> int:
    """Materialize the fixture set as .nii files; returns the file count.

    Likelihood fixtures that feed parity checks are written as float64 so
    no precision is lost crossing the file boundary."""
    root = Path(outdir)
    root.mkdir(parents=True, exist_ok=True)
    items = fixture_set()
    for stem, obj in items.items():
        if isinstance(obj, LikelihoodGrid):
            write_volume(obj.values.astype(np.float64), root / f"{stem}.nii")
        else:
            write_volume(obj, root / f"{stem}.nii")
    return len(items)
