"""Evaluation metrics: DSC, ASSD, Betti-number error, Hole Ratio, and
largest-component filtering.

Undefined values (ASSD with an empty mask, HR with empty ground truth) are
returned as None rather than raised, so batch evaluation can proceed and
serialization can emit explicit nulls.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .grid import BinaryMask, background_structure, foreground_structure
from .persistence import BettiVector, betti_numbers, compute_persistence

DEFAULT_SEED_RADIUS = 3


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    subject_id: str
    dsc: float
    assd_mm: Optional[float]
    bne: Dict[int, int]
    hole_ratio: Optional[float]
    counts: ConfusionCounts
    fn_holes_count: int
    gt_bn1: int  # HR trusts a topologically clean GT; surfaced as a warning signal


REPORT_FIELDS = (
    "subject_id",
    "dsc",
    "assd_mm",
    "bne1",
    "hole_ratio",
    "tp",
    "fp",
    "fn",
    "fn_holes",
)


def _as_bool(m) -> np.ndarray:
    arr = m.values if isinstance(m, BinaryMask) else np.asarray(m)
    return arr != 0


def _check_pair(pred: np.ndarray, gt: np.ndarray):
    if pred.shape != gt.shape:
        raise ParameterError(
            f"shape mismatch: pred {pred.shape} vs gt {gt.shape}"
        )


def _spacing_tuple(spacing, rank: int) -> Tuple[float, ...]:
    if spacing is None:
        return (1.0,) * rank
    if np.isscalar(spacing):
        spacing = (float(spacing),) * rank
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != rank or any(s <= 0 for s in spacing):
        raise ParameterError(f"bad spacing {spacing!r} for rank {rank}")
    return spacing


def confusion(pred, gt) -> ConfusionCounts:
    p = _as_bool(pred)
    g = _as_bool(gt)
    _check_pair(p, g)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=p.size - tp - fp - fn)


def dsc(pred, gt) -> float:
    """2|P∩G| / (|P|+|G|); 1.0 when both masks are empty."""
    p = _as_bool(pred)
    g = _as_bool(gt)
    _check_pair(p, g)
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(p & g)) / denom


def _border(mask: np.ndarray) -> np.ndarray:
    # border voxel: foreground with at least one face-neighbor background,
    # the outside of the grid counting as background
    eroded = ndimage.binary_erosion(
        mask, structure=background_structure(mask.ndim), border_value=0
    )
    return mask & ~eroded


def assd(pred, gt, spacing=None) -> Optional[float]:
    """Mean of the two directed average surface distances, in mm.

    Surfaces are border voxels; distances come from the exact Euclidean
    distance transform with anisotropic sampling. None if either mask is
    empty."""
    p = _as_bool(pred)
    g = _as_bool(gt)
    _check_pair(p, g)
    if not p.any() or not g.any():
        return None
    sp = _spacing_tuple(spacing, p.ndim)
    bp = _border(p)
    bg_ = _border(g)
    d_to_g = ndimage.distance_transform_edt(~bg_, sampling=sp)
    d_to_p = ndimage.distance_transform_edt(~bp, sampling=sp)
    return 0.5 * (float(d_to_g[bp].mean()) + float(d_to_p[bg_].mean()))


def bne(pred, gt_expected: Optional[BettiVector] = None, k: int = 1) -> int:
    """|BN_k(pred) - expected BN_k|. The default expectation is one
    component and no holes or cavities."""
    if k not in (0, 1, 2):
        raise ParameterError(f"k must be 0, 1 or 2, got {k!r}")
    expected = gt_expected if gt_expected is not None else BettiVector(1, 0, 0)
    return abs(betti_numbers(_as_bool(pred))[k] - expected[k])


def _joint_bbox(a: np.ndarray, b: np.ndarray):
    union = a | b
    if not union.any():
        return tuple(slice(0, s) for s in a.shape)
    slices = []
    for ax in range(union.ndim):
        other = tuple(x for x in range(union.ndim) if x != ax)
        nz = np.flatnonzero(union.any(axis=other))
        slices.append(
            slice(max(int(nz[0]) - 1, 0), min(int(nz[-1]) + 2, union.shape[ax]))
        )
    return tuple(slices)


def hole_ratio(
    pred,
    gt,
    mp: float = 0.01,
    seed_radius: int = DEFAULT_SEED_RADIUS,
) -> Tuple[Optional[float], BinaryMask]:
    """HR = |FN_holes| / (TP + FN) with FN_holes grown from hole seeds.

    One seed per dim-1 persistence pair of the prediction (its birth cell);
    each seed maps to the nearest false-negative voxel within Chebyshev
    radius ``seed_radius`` (unmappable seeds are skipped); FN_holes is the
    union of face-connected FN components containing a mapped seed.
    Returns (None, empty mask) when the ground truth is empty."""
    p = _as_bool(pred)
    g = _as_bool(gt)
    _check_pair(p, g)
    if seed_radius < 0:
        raise ParameterError("seed_radius must be >= 0")
    empty = BinaryMask(np.zeros(p.shape, dtype=np.uint8))
    if not g.any():
        return None, empty
    denom = int(g.sum())  # == TP + FN

    box = _joint_bbox(p, g)
    pc = p[box]
    gc = g[box]
    fn = gc & ~pc

    diagram = compute_persistence(pc.astype(np.float64), mp=mp)
    _, _, seeds, _ = diagram.arrays(1)
    if seeds.size == 0 or not fn.any():
        return 0.0, empty

    labels, _ = ndimage.label(fn, structure=background_structure(fn.ndim))
    hit = set()
    r = seed_radius
    for flat in seeds.tolist():
        seed = np.unravel_index(flat, pc.shape)
        window = tuple(
            slice(max(c - r, 0), min(c + r + 1, n))
            for c, n in zip(seed, pc.shape)
        )
        local = fn[window]
        if not local.any():
            continue
        cand = np.argwhere(local)
        offs = np.array([w.start for w in window])
        d2 = np.sum((cand + offs - np.array(seed)) ** 2, axis=1)
        flat_local = np.ravel_multi_index((cand + offs).T, pc.shape)
        best = np.lexsort((flat_local, d2))[0]
        hit.add(int(labels[tuple(cand[best] + offs)]))
    if not hit:
        return 0.0, empty

    fn_holes_core = np.isin(labels, sorted(hit))
    full = np.zeros(p.shape, dtype=np.uint8)
    full[box] = fn_holes_core.astype(np.uint8)
    return float(np.count_nonzero(fn_holes_core)) / denom, BinaryMask(full)


def largest_cc(m) -> BinaryMask:
    """Keep only the largest full-adjacency foreground component; ties go
    to the component containing the smallest row-major cell."""
    mask = _as_bool(m)
    if not mask.any():
        return BinaryMask(np.zeros(mask.shape, dtype=np.uint8))
    labels, n = ndimage.label(mask, structure=foreground_structure(mask.ndim))
    if n == 1:
        return BinaryMask(mask.astype(np.uint8))
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    best = sizes.max()
    cands = np.flatnonzero(sizes == best)
    if cands.size == 1:
        winner = int(cands[0])
    else:
        flat = labels.ravel()
        pos = int(np.argmax(np.isin(flat, cands)))
        winner = int(flat[pos])
    return BinaryMask((labels == winner).astype(np.uint8))


def evaluate_pair(
    pred,
    gt,
    spacing=None,
    mp: float = 0.01,
    gt_expected: Optional[BettiVector] = None,
    subject_id: str = "",
    seed_radius: int = DEFAULT_SEED_RADIUS,
) -> MetricsReport:
    """Full report for one subject: DSC, ASSD, BNE per dimension, HR."""
    p = _as_bool(pred)
    g = _as_bool(gt)
    _check_pair(p, g)
    # unlike bare bne(), evaluation measures against the reference mask
    # itself unless a prior is supplied, so identity pairs score 0
    gt_bn = betti_numbers(g)
    expected = gt_expected if gt_expected is not None else gt_bn
    counts = confusion(p, g)
    hr, fn_holes = hole_ratio(p, g, mp=mp, seed_radius=seed_radius)
    return MetricsReport(
        subject_id=subject_id,
        dsc=dsc(p, g),
        assd_mm=assd(p, g, spacing),
        bne={k: bne(p, expected, k) for k in (0, 1, 2)},
        hole_ratio=hr,
        counts=counts,
        fn_holes_count=int(np.count_nonzero(fn_holes.values)),
        gt_bn1=gt_bn.bn1,
    )


def _report_row(report: MetricsReport) -> Dict[str, object]:
    return {
        "subject_id": report.subject_id,
        "dsc": report.dsc,
        "assd_mm": report.assd_mm,
        "bne1": report.bne.get(1, 0),
        "hole_ratio": report.hole_ratio,
        "tp": report.counts.tp,
        "fp": report.counts.fp,
        "fn": report.counts.fn,
        "fn_holes": report.fn_holes_count,
    }


def write_report_csv(reports: Sequence[MetricsReport], path) -> None:
    """One row per subject; missing values are empty cells, reals use %.6g."""
    lines = [",".join(REPORT_FIELDS)]
    for rep in reports:
        row = _report_row(rep)
        cells = []
        for name in REPORT_FIELDS:
            v = row[name]
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append("%.6g" % v)
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_json(reports: Sequence[MetricsReport], path) -> None:
    """Full-precision JSON; adds gt_bn1 so HR can be read with context."""
    payload = []
    for rep in reports:
        row = _report_row(rep)
        row["gt_bn1"] = rep.gt_bn1
        payload.append(row)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
