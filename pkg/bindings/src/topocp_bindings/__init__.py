"""Array-in/array-out access to the topocp loss and metrics for training loops.

Two functions: py_topo_loss returns the blended topological loss and its
gradient for a likelihood/target pair; py_metrics returns the evaluation
report for a predicted/reference mask pair. Both reproduce the core's numbers
exactly (the CLI prints float64 round-trip precision and gradients travel as
float64 volumes). Calls are independent processes, so concurrent use from
multiple threads is safe and the host interpreter's global lock is never held
during the computation.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from . import _core, _nifti

__version__ = "0.1.0"
__all__ = ["py_topo_loss", "py_metrics", "__version__"]

_FLOAT_DTYPES = (np.float32, np.float64)
_ALLOWED = _FLOAT_DTYPES + (np.uint8, np.bool_)


def _as_array(x, name):
    arr = np.asarray(x)
    if arr.dtype.type not in _ALLOWED:
        raise TypeError(
            f"{name} has dtype {arr.dtype}; expected float32, float64, or uint8"
        )
    if arr.ndim not in (2, 3):
        raise ValueError(f"{name} must be a 2D or 3D array, got rank {arr.ndim}")
    return arr


def _as_likelihood(x, name):
    arr = np.ascontiguousarray(_as_array(x, name), dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def _as_mask(x, name):
    arr = _as_array(x, name)
    vals = np.unique(arr)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"{name} must be binary (values in {{0, 1}})")
    return np.ascontiguousarray(arr, dtype=np.uint8)


def _check_shapes(a, a_name, b, b_name):
    if a.shape != b.shape:
        raise ValueError(
            f"{b_name} shape {b.shape} does not match {a_name} shape {a.shape}"
        )


def py_topo_loss(pred, target, lam=0.005, mp=0.01, omega=None):
    """Blended loss (1 - lam) * bce + lam * topo and its gradient in pred.

    pred: likelihood array in [0, 1]; target: binary array of the same shape;
    omega: per-dimension weights, length = rank of pred (defaults to ones).
    Returns (value, gradient) with gradient a new float64 array co-shaped
    with pred.
    """
    p = _as_likelihood(pred, "pred")
    t = _as_mask(target, "target")
    _check_shapes(p, "pred", t, "target")
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam!r}")
    mp = float(mp)
    if not 0.0 <= mp < 1.0:
        raise ValueError(f"mp must lie in [0, 1), got {mp!r}")
    if omega is not None:
        omega = tuple(float(w) for w in omega)
        if len(omega) != p.ndim:
            raise ValueError(
                f"omega needs {p.ndim} weights for a rank-{p.ndim} pred, got {len(omega)}"
            )
        if any(w < 0.0 for w in omega):
            raise ValueError("omega weights must be non-negative")

    with tempfile.TemporaryDirectory(prefix="topocp-bind-") as tmp:
        tmp = Path(tmp)
        _nifti.write(p, tmp / "pred.nii")
        _nifti.write(t, tmp / "gt.nii")
        args = [
            "loss", "--pred", str(tmp / "pred.nii"), "--gt", str(tmp / "gt.nii"),
            "--mode", "topocp", "--lambda", repr(lam), "--mp", repr(mp),
            "--grad", str(tmp / "grad.nii"),
        ]
        if omega is not None:
            args += ["--omega", ",".join(repr(w) for w in omega)]
        out = _core.run(args)
        value = None
        for line in out.splitlines():
            if line.startswith("value = "):
                value = float(line[len("value = "):])
                break
        if value is None:
            raise RuntimeError(f"core CLI printed no loss value:\n{out}")
        gradient = _nifti.read_float64(tmp / "grad.nii")
    return value, gradient


def py_metrics(pred, gt, spacing=None):
    """Evaluation report for a predicted mask against a reference mask.

    Returns the core eval report as a dict: subject_id, dsc, assd_mm, bne1,
    hole_ratio, tp, fp, fn, fn_holes. Undefined metrics come back as None.
    The reference must contain foreground; an all-background gt is an error
    here rather than a row of nulls.
    """
    p = _as_mask(pred, "pred")
    g = _as_mask(gt, "gt")
    _check_shapes(p, "pred", g, "gt")
    if not g.any():
        raise ValueError("gt contains no foreground voxels")
    if spacing is None:
        spacing = (1.0,) * p.ndim
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != p.ndim or any(s <= 0.0 for s in spacing):
        raise ValueError(
            f"spacing needs {p.ndim} positive values for a rank-{p.ndim} pred, got {spacing!r}"
        )

    with tempfile.TemporaryDirectory(prefix="topocp-bind-") as tmp:
        tmp = Path(tmp)
        _nifti.write(p, tmp / "pred.nii", spacing=spacing)
        _nifti.write(g, tmp / "gt.nii", spacing=spacing)
        _core.run([
            "eval", "--pred", str(tmp / "pred.nii"), "--gt", str(tmp / "gt.nii"),
            "--report", str(tmp / "report.json"),
        ])
        rows = json.loads((tmp / "report.json").read_text())
    if len(rows) != 1:
        raise RuntimeError(f"expected one report row, got {len(rows)}")
    return rows[0]
