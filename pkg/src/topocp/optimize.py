"""Direct gradient descent on a likelihood grid.

This is a pedagogical driver, not a training loop: the "model" is the grid
itself. Each step evaluates the configured loss against a binary target,
walks the grid against the gradient, and clamps back into [0, 1]. BN1 of
the 0.5-threshold mask is recorded alongside the loss so topology repair
is visible in the trajectory.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import ParameterError
from .grid import BinaryMask, LikelihoodGrid, threshold
from .loss import LossConfig, combined_loss
from .persistence import betti_numbers


@dataclass(frozen=True)
class OptimRun:
    steps: int
    lr: float
    trajectory: Tuple[Tuple[float, int], ...]  # (loss, bn1) per state, length steps+1
    final: LikelihoodGrid

    @property
    def losses(self) -> Tuple[float, ...]:
        return tuple(l for l, _ in self.trajectory)

    @property
    def bn1_curve(self) -> Tuple[int, ...]:
        return tuple(b for _, b in self.trajectory)


def _bn1_at_half(values: np.ndarray) -> int:
    mask = BinaryMask((values >= 0.5).astype(np.uint8))
    return betti_numbers(mask).bn1


def optimize_likelihood(
    init: LikelihoodGrid,
    target: BinaryMask,
    cfg: Optional[LossConfig] = None,
    steps: int = 100,
    lr: float = 0.5,
) -> OptimRun:
    """Run clamped gradient descent from init toward target.

    The trajectory holds the loss and BN1 of every visited state including
    the initial one, so entry t describes the grid before step t+1."""
    cfg = cfg or LossConfig()
    if steps < 0:
        raise ParameterError(f"steps must be >= 0, got {steps}")
    if lr <= 0:
        raise ParameterError(f"lr must be positive, got {lr}")
    if init.values.shape != target.values.shape:
        raise ParameterError(
            f"shape mismatch: init {init.values.shape} vs target {target.values.shape}"
        )
    f = init.values.copy()
    spacing = init.spacing
    trajectory: List[Tuple[float, int]] = []
    for _ in range(steps):
        res = combined_loss(LikelihoodGrid(f, spacing=spacing), target, cfg)
        trajectory.append((float(res.value), _bn1_at_half(f)))
        f = np.clip(f - lr * res.gradient, 0.0, 1.0)
    res = combined_loss(LikelihoodGrid(f, spacing=spacing), target, cfg)
    trajectory.append((float(res.value), _bn1_at_half(f)))
    return OptimRun(
        steps=steps,
        lr=lr,
        trajectory=tuple(trajectory),
        final=LikelihoodGrid(f, spacing=spacing),
    )


def write_trajectory_csv(run: OptimRun, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss", "bn1"])
        for step, (loss, bn1) in enumerate(run.trajectory):
            w.writerow([step, repr(loss), bn1])
