"""Persistence-matching topological loss and the composite training losses.

Per homology dimension, prediction pairs are matched to target pairs
greedily by descending persistence (top N = min of the two counts); leftover
prediction pairs go to their diagonal projection, and leftover target pairs
contribute the symmetric diagonal cost as a gradient-free constant. Costs
are squared Euclidean in (birth, death) coordinates, so gradients are plain
differences routed to the critical cells of each prediction pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import ParameterError
from .grid import BinaryMask, LikelihoodGrid
from .persistence import (
    PersistenceDiagram,
    PersistencePair,
    betti_numbers,
    compute_persistence,
)

BCE_EPS = 1e-7
DICE_SMOOTHING = 1.0

MODES = ("baseline", "hybrid", "topocp")


@dataclass(frozen=True)
class LossWeights:
    """Per-dimension weights omega_k for k = 0..K."""

    omega: Tuple[float, ...] = None
    K: int = 1

    def __post_init__(self):
        if self.K < 0:
            raise ParameterError("K must be >= 0")
        omega = self.omega
        if omega is None:
            omega = (1.0,) * (self.K + 1)
        omega = tuple(float(w) for w in omega)
        if len(omega) != self.K + 1:
            raise ParameterError(
                f"need K+1 = {self.K + 1} weights, got {len(omega)}"
            )
        if any(w < 0 for w in omega) or not any(w > 0 for w in omega):
            raise ParameterError("weights must be >= 0 with at least one > 0")
        object.__setattr__(self, "omega", omega)


@dataclass(frozen=True)
class LossConfig:
    lambda_topo: float = 0.005
    mp: float = 0.01
    weights: LossWeights = field(default_factory=LossWeights)
    mode: str = "topocp"

    def __post_init__(self):
        if not (0.0 <= self.lambda_topo <= 1.0):
            raise ParameterError(
                f"lambda_topo must lie in [0, 1], got {self.lambda_topo!r}"
            )
        if not (0.0 <= self.mp < 1.0):
            raise ParameterError(f"mp must lie in [0, 1), got {self.mp!r}")
        if self.mode not in MODES:
            raise ParameterError(
                f"mode must be one of {MODES}, got {self.mode!r}"
            )


@dataclass(frozen=True)
class Matching:
    """Greedy persistence-rank matching for one homology dimension."""

    dim: int
    matched: Tuple[Tuple[PersistencePair, PersistencePair], ...]
    to_diagonal: Tuple[PersistencePair, ...]


@dataclass(frozen=True)
class LossResult:
    value: float
    gradient: np.ndarray
    per_dim: Dict[int, float]


def _as_grid(f) -> LikelihoodGrid:
    return f if isinstance(f, LikelihoodGrid) else LikelihoodGrid(np.asarray(f))


def _as_mask(m) -> BinaryMask:
    return m if isinstance(m, BinaryMask) else BinaryMask(np.asarray(m))


def _check_shapes(f: LikelihoodGrid, t: BinaryMask):
    if f.values.shape != t.values.shape:
        raise ParameterError(
            f"shape mismatch: likelihood {f.values.shape} vs target {t.values.shape}"
        )


def binary_target_diagram(target: Union[BinaryMask, np.ndarray]) -> PersistenceDiagram:
    """Diagram of a binary mask built directly from its Betti numbers: each
    dimension k contributes bn_k copies of (0, 1). No filtration sweep; the
    critical cells are representative placeholders (first foreground cell
    for deaths, first background cell for births, None for the essential)."""
    mask = _as_mask(target)
    bv = betti_numbers(mask)
    flat = mask.values.ravel()
    fg = np.flatnonzero(flat)
    bg = np.flatnonzero(flat == 0)
    fg_cell = int(fg[0]) if fg.size else -1
    bg_cell = int(bg[0]) if bg.size else -1

    dims, births, deaths, bcells, dcells = [], [], [], [], []
    for k in range(3):
        for copy in range(bv[k]):
            dims.append(k)
            births.append(0.0)
            deaths.append(1.0)
            # the one essential component carries no birth cell
            bcells.append(-1 if (k == 0 and copy == 0) else bg_cell)
            dcells.append(fg_cell)
    return PersistenceDiagram(
        shape=mask.values.shape,
        mp=0.0,
        dims=np.array(dims, dtype=np.int8),
        births=np.array(births, dtype=np.float64),
        deaths=np.array(deaths, dtype=np.float64),
        birth_cells=np.array(bcells, dtype=np.int64),
        death_cells=np.array(dcells, dtype=np.int64),
    )


def match_diagrams(
    pred: PersistenceDiagram, target: PersistenceDiagram, k: int
) -> Matching:
    """Top-N greedy matching in dimension k; N = min of the pair counts.

    Both diagrams are already in canonical order (descending persistence),
    so the matching is positional. Every prediction pair lands in exactly
    one of matched / to_diagonal."""
    pred_pairs = pred.in_dimension(k)
    target_pairs = target.in_dimension(k)
    n = min(len(pred_pairs), len(target_pairs))
    return Matching(
        dim=k,
        matched=tuple(zip(pred_pairs[:n], target_pairs[:n])),
        to_diagonal=tuple(pred_pairs[n:]),
    )


def topo_loss(
    f: Union[LikelihoodGrid, np.ndarray],
    target: Union[BinaryMask, np.ndarray],
    cfg: Optional[LossConfig] = None,
    *,
    target_diagram: Optional[PersistenceDiagram] = None,
) -> LossResult:
    """Multi-dimensional matching loss with analytic gradient in f.

    Matched pair cost (b-bt)^2 + (d-dt)^2, diagonal cost (d-b)^2/2 for
    both leftover prediction pairs (with gradient) and leftover target
    pairs (constant). Gradients accumulate at the critical cells, whose
    values equal the pair coordinates, so d(birth)/d(f[birth_cell]) = 1.

    ``target_diagram`` short-circuits the per-call target sweep when one
    target is reused across many calls; it must describe ``target``.
    """
    cfg = cfg if cfg is not None else LossConfig()
    grid = _as_grid(f)
    mask = _as_mask(target)
    _check_shapes(grid, mask)

    pred = compute_persistence(grid, mp=cfg.mp)
    tdiag = target_diagram if target_diagram is not None else binary_target_diagram(mask)

    grad = np.zeros(grid.values.size, dtype=np.float64)
    per_dim: Dict[int, float] = {}
    weights = cfg.weights
    for k in range(weights.K + 1):
        w = weights.omega[k]
        pb, pd, pbc, pdc = pred.arrays(k)
        tb, td, _, _ = tdiag.arrays(k)
        n = min(pb.shape[0], tb.shape[0])
        cost = 0.0
        if n:
            db = pb[:n] - tb[:n]
            dd = pd[:n] - td[:n]
            cost += float(np.sum(db * db + dd * dd))
            real = pbc[:n] >= 0
            np.add.at(grad, pbc[:n][real], w * 2.0 * db[real])
            np.add.at(grad, pdc[:n], w * 2.0 * dd)
        if pb.shape[0] > n:
            gap = pd[n:] - pb[n:]
            cost += float(np.sum(gap * gap) / 2.0)
            real = pbc[n:] >= 0
            np.add.at(grad, pbc[n:][real], -w * gap[real])
            np.add.at(grad, pdc[n:], w * gap)
        if tb.shape[0] > n:
            tgap = td[n:] - tb[n:]
            cost += float(np.sum(tgap * tgap) / 2.0)
        per_dim[k] = cost
    value = float(sum(weights.omega[k] * per_dim[k] for k in per_dim))
    return LossResult(
        value=value, gradient=grad.reshape(grid.values.shape), per_dim=per_dim
    )


def bce_loss(
    f: Union[LikelihoodGrid, np.ndarray], target: Union[BinaryMask, np.ndarray]
) -> LossResult:
    """Mean binary cross-entropy with values clamped to [eps, 1-eps]."""
    grid = _as_grid(f)
    mask = _as_mask(target)
    _check_shapes(grid, mask)
    p = np.clip(grid.values, BCE_EPS, 1.0 - BCE_EPS)
    t = mask.values.astype(np.float64)
    n = p.size
    value = float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))
    grad = (p - t) / (p * (1.0 - p)) / n
    return LossResult(value=value, gradient=grad, per_dim={})


def dice_loss(
    f: Union[LikelihoodGrid, np.ndarray], target: Union[BinaryMask, np.ndarray]
) -> LossResult:
    """Soft Dice loss 1 - (2*sum(f*t)+s)/(sum(f)+sum(t)+s), s = 1."""
    grid = _as_grid(f)
    mask = _as_mask(target)
    _check_shapes(grid, mask)
    p = grid.values
    t = mask.values.astype(np.float64)
    s = DICE_SMOOTHING
    a = 2.0 * float(np.sum(p * t)) + s
    b = float(np.sum(p) + np.sum(t)) + s
    value = 1.0 - a / b
    grad = -(2.0 * t * b - a) / (b * b)
    return LossResult(value=value, gradient=grad, per_dim={})


def combined_loss(
    f: Union[LikelihoodGrid, np.ndarray],
    target: Union[BinaryMask, np.ndarray],
    cfg: Optional[LossConfig] = None,
    *,
    target_diagram: Optional[PersistenceDiagram] = None,
) -> LossResult:
    """mode=baseline: BCE. mode=hybrid: BCE + Dice.
    mode=topocp: (1 - lambda)*BCE + lambda*topo."""
    cfg = cfg if cfg is not None else LossConfig()
    bce = bce_loss(f, target)
    if cfg.mode == "baseline":
        return bce
    if cfg.mode == "hybrid":
        dice = dice_loss(f, target)
        return LossResult(
            value=bce.value + dice.value,
            gradient=bce.gradient + dice.gradient,
            per_dim={},
        )
    lam = cfg.lambda_topo
    topo = topo_loss(f, target, cfg, target_diagram=target_diagram)
    return LossResult(
        value=(1.0 - lam) * bce.value + lam * topo.value,
        gradient=(1.0 - lam) * bce.gradient + lam * topo.gradient,
        per_dim=topo.per_dim,
    )
