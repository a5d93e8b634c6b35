"""Command-line front end.

Human-readable text goes to stdout; machine-readable artifacts only ever
leave through --out / --report / --traj files, so scripts can parse those
without caring about the console format. Exit codes: 0 ok, 1 usage, 2 I/O,
3 bad parameter, 4 computation failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import ComputationError, ParameterError, TopocpError, UsageError, VolumeIOError
from .fixtures import write_fixture_set
from .grid import BinaryMask, LikelihoodGrid
from .io import read_volume, write_report, write_volume
from .loss import LossConfig, LossWeights, combined_loss
from .metrics import evaluate_pair, largest_cc
from .optimize import optimize_likelihood, write_trajectory_csv
from .patches import PatchSpec, aggregate, extract_patches, read_patch_dir, write_patch_dir
from .persistence import betti_numbers, compute_persistence, write_diagram_csv


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError
    # so the documented usage code (1) applies
    def error(self, message):
        raise UsageError(message)


def _csv_ints(text: str) -> Tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _csv_floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _csv_names(text: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _as_likelihood(obj) -> LikelihoodGrid:
    return obj.as_likelihood() if isinstance(obj, BinaryMask) else obj


def _workers() -> Optional[int]:
    raw = os.environ.get("TOPOCP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"TOPOCP_THREADS must be an integer, got {raw!r}")
    return n if n > 0 else None


def _loss_config(args, rank: int) -> LossConfig:
    omega = args.omega if args.omega is not None else None
    return LossConfig(
        lambda_topo=args.lambda_topo,
        mp=args.mp,
        weights=LossWeights(omega=omega, K=rank - 1),
        mode=args.mode,
    )


def _cmd_betti(args) -> int:
    mask, _ = read_volume(args.input, kind="mask")
    b = betti_numbers(mask)
    print(f"{b.bn0} {b.bn1} {b.bn2}")
    return 0


def _cmd_persistence(args) -> int:
    grid, _ = read_volume(args.input)
    grid = _as_likelihood(grid)
    diagram = compute_persistence(grid, mp=args.mp, pad_input=args.pad)
    write_diagram_csv(diagram, args.out)
    ks, counts = np.unique(diagram.dims, return_counts=True)
    per_dim = " ".join(f"dim{int(k)}={int(c)}" for k, c in zip(ks, counts))
    print(f"{len(diagram)} pairs ({per_dim or 'empty'}) -> {args.out}")
    return 0


def _cmd_loss(args) -> int:
    pred, hdr = read_volume(args.pred)
    pred = _as_likelihood(pred)
    gt, _ = read_volume(args.gt, kind="mask")
    cfg = _loss_config(args, pred.rank)
    res = combined_loss(pred, gt, cfg)
    print(f"value = {res.value:.17g}")
    for k in sorted(res.per_dim):
        print(f"dim{k} = {res.per_dim[k]:.17g}")
    if args.grad:
        write_volume(np.asarray(res.gradient, dtype=np.float64), args.grad, spacing=hdr.spacing)
        print(f"gradient -> {args.grad}")
    return 0


def _eval_one(pred_path, gt_path, args, subject_id: str):
    pred, hdr = read_volume(pred_path, kind="mask")
    gt, _ = read_volume(gt_path, kind="mask")
    if not args.no_lcc:
        pred = largest_cc(pred)
    report = evaluate_pair(
        pred, gt, spacing=hdr.spacing, mp=args.mp, subject_id=subject_id
    )
    if args.strict and report.assd_mm is None:
        raise ComputationError(f"ASSD undefined for subject {subject_id!r} (empty surface)")
    return report


def _pair_list(args) -> List[Tuple[Path, Path, str]]:
    if args.pred and args.gt:
        return [(Path(args.pred), Path(args.gt), Path(args.pred).stem)]
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    preds = sorted(pred_dir.glob("*.nii"))
    if not preds:
        raise VolumeIOError(f"no .nii volumes under {pred_dir}", code="NO_FILE")
    pairs = []
    for p in preds:
        g = gt_dir / p.name
        if not g.is_file():
            raise VolumeIOError(f"missing ground truth {g}", code="NO_FILE")
        pairs.append((p, g, p.stem))
    return pairs


def _cmd_eval(args) -> int:
    if bool(args.pred) == bool(args.pred_dir):
        raise UsageError("provide either --pred/--gt or --pred-dir/--gt-dir")
    if args.pred and not args.gt:
        raise UsageError("--pred requires --gt")
    if args.pred_dir and not args.gt_dir:
        raise UsageError("--pred-dir requires --gt-dir")
    pairs = _pair_list(args)
    if len(pairs) == 1:
        reports = [_eval_one(*pairs[0][:2], args, pairs[0][2])]
    else:
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            futures = [pool.submit(_eval_one, p, g, args, sid) for p, g, sid in pairs]
            reports = [f.result() for f in futures]  # submission order == sorted order
    write_report(reports, args.report, format="json")
    if args.csv:
        write_report(reports, args.csv, format="csv")
    for r in reports:
        assd = "nan" if r.assd_mm is None else f"{r.assd_mm:.6g}"
        hr = "nan" if r.hole_ratio is None else f"{r.hole_ratio:.6g}"
        print(
            f"{r.subject_id or 'volume'}: dsc={r.dsc:.6g} assd={assd} "
            f"bne1={r.bne[1]} hr={hr}"
        )
    return 0


def _cmd_patches(args) -> int:
    vol, hdr = read_volume(args.input, kind="intensity")
    mask, _ = read_volume(args.mask, kind="mask")
    spec = PatchSpec(size=args.size, stride=args.stride, axes=args.axes)
    records = list(extract_patches(vol, mask, spec))
    n = write_patch_dir(records, args.out, vol.shape, spacing=hdr.spacing)
    print(f"{n} patches -> {args.out}")
    return 0


def _cmd_aggregate(args) -> int:
    records, idx_dims, spacing = read_patch_dir(args.patches)
    dims = args.dims
    if len(dims) != 3:
        raise ParameterError(f"--dims needs three sizes, got {dims}")
    if idx_dims and tuple(idx_dims) != dims:
        raise ParameterError(f"--dims {dims} disagrees with patch index {tuple(idx_dims)}")
    prob, mask = aggregate(records, dims)
    write_volume(prob, args.out_prob, spacing=spacing)
    write_volume(mask, args.out_mask, spacing=spacing)
    print(f"aggregated {len(records)} patches into {dims[0]}x{dims[1]}x{dims[2]}")
    return 0


def _cmd_demo(args) -> int:
    init, hdr = read_volume(args.init)
    init = _as_likelihood(init)
    target, _ = read_volume(args.target, kind="mask")
    cfg = _loss_config(args, init.rank)
    run = optimize_likelihood(init, target, cfg, steps=args.steps, lr=args.lr)
    if args.traj:
        write_trajectory_csv(run, args.traj)
    write_volume(run.final, args.out, spacing=hdr.spacing)
    loss0, bn0 = run.trajectory[0]
    loss1, bn1 = run.trajectory[-1]
    print(f"step 0: loss = {loss0:.17g}, bn1 = {bn0}")
    print(f"step {run.steps}: loss = {loss1:.17g}, bn1 = {bn1}")
    print(f"final volume -> {args.out}")
    return 0


def _cmd_gen_fixtures(args) -> int:
    n = write_fixture_set(args.out)
    print(f"{n} fixtures -> {args.out}")
    return 0


def _add_loss_flags(p: argparse.ArgumentParser, default_mode: str = "topocp"):
    p.add_argument("--mode", choices=("baseline", "hybrid", "topocp"), default=default_mode)
    p.add_argument("--lambda", dest="lambda_topo", type=float, default=0.005)
    p.add_argument("--mp", type=float, default=0.01)
    p.add_argument("--omega", type=_csv_floats, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topocp", description="Topology-aware segmentation toolkit")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("betti", help="Betti numbers of a binary mask")
    p.add_argument("--input", required=True)
    p.set_defaults(fn=_cmd_betti)

    p = sub.add_parser("persistence", help="persistence diagram of a likelihood volume")
    p.add_argument("--input", required=True)
    p.add_argument("--mp", type=float, default=0.01)
    p.add_argument("--pad", action="store_true", help="pad the grid before filtering")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_persistence)

    p = sub.add_parser("loss", help="segmentation loss value and gradient")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    _add_loss_flags(p)
    p.add_argument("--grad", help="write the gradient volume here")
    p.set_defaults(fn=_cmd_loss)

    p = sub.add_parser("eval", help="segmentation quality report")
    p.add_argument("--pred")
    p.add_argument("--gt")
    p.add_argument("--pred-dir")
    p.add_argument("--gt-dir")
    p.add_argument("--report", required=True)
    p.add_argument("--csv")
    p.add_argument("--mp", type=float, default=0.01)
    p.add_argument("--no-lcc", action="store_true", help="skip largest-component filtering")
    p.add_argument("--strict", action="store_true", help="fail on undefined ASSD")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("patches", help="extract training patches")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--stride", type=int, default=16)
    p.add_argument("--axes", type=_csv_names, default=("axial", "coronal", "sagittal"))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_patches)

    p = sub.add_parser("aggregate", help="fuse patch predictions into a volume")
    p.add_argument("--patches", required=True)
    p.add_argument("--dims", type=_csv_ints, required=True)
    p.add_argument("--out-prob", required=True)
    p.add_argument("--out-mask", required=True)
    p.set_defaults(fn=_cmd_aggregate)

    p = sub.add_parser("demo", help="gradient-descent topology repair demo")
    p.add_argument("--target", required=True)
    p.add_argument("--init", required=True)
    _add_loss_flags(p)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--traj", help="write the trajectory CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_demo)

    p = sub.add_parser("gen-fixtures")  # deliberately undocumented test helper
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            raise UsageError("missing subcommand (see --help)")
        return args.fn(args)
    except TopocpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
