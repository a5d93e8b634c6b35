"""CLI tests: golden comparisons against direct library calls.

Everything runs in-process through main(argv) so exit codes and stdout are
observable without a subprocess; one test keeps a real subprocess to prove
the installed entry point wires up.
"""
import json
import subprocess
import sys

import numpy as np
import pytest

from topocp import (
    BinaryMask,
    LikelihoodGrid,
    LossConfig,
    combined_loss,
    compute_persistence,
    evaluate_pair,
    largest_cc,
    read_volume,
    write_volume,
)
from topocp.cli import main
from topocp.fixtures import loss_ring, shell_pair, write_fixture_set


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    root = tmp_path_factory.mktemp("fx")
    write_fixture_set(root)
    return root


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_betti_ring(fx, capsys):
    code, out, _ = run_cli(capsys, "betti", "--input", str(fx / "ring.nii"))
    assert code == 0
    assert out.strip() == "1 1 0"


def test_betti_hollow_cube(fx, capsys):
    code, out, _ = run_cli(capsys, "betti", "--input", str(fx / "hollow_cube.nii"))
    assert code == 0
    assert out.strip() == "1 0 1"


def test_persistence_csv_matches_library(fx, capsys, tmp_path):
    out_csv = tmp_path / "d.csv"
    code, _, _ = run_cli(
        capsys, "persistence", "--input", str(fx / "loss_pred.nii"), "--mp", "0.01",
        "--out", str(out_csv),
    )
    assert code == 0
    pred, _ = loss_ring()
    diag = compute_persistence(pred, mp=0.01)
    lines = out_csv.read_text().strip().splitlines()
    assert len(lines) == len(diag) + 1
    assert lines[1] == "0,0.0,0.9,,1;1"
    assert lines[2] == "1,0.05,0.4,2;2,1;3"


def test_loss_value_matches_library_bitwise(fx, capsys, tmp_path):
    grad_path = tmp_path / "g.nii"
    code, out, _ = run_cli(
        capsys, "loss", "--pred", str(fx / "loss_pred.nii"), "--gt", str(fx / "loss_target.nii"),
        "--mode", "topocp", "--lambda", "0.005", "--grad", str(grad_path),
    )
    assert code == 0
    pred, target = loss_ring()
    res = combined_loss(pred, target, LossConfig(lambda_topo=0.005, mode="topocp"))
    value_line = out.splitlines()[0]
    assert value_line == f"value = {res.value:.17g}"
    # 17 significant digits round-trip float64 exactly
    assert float(value_line.split("=")[1]) == res.value
    grad, _ = read_volume(grad_path, kind="intensity")
    assert np.array_equal(grad, res.gradient)


def test_loss_lambda_zero_prints_baseline_value(fx, capsys):
    _, out_a, _ = run_cli(
        capsys, "loss", "--pred", str(fx / "loss_pred.nii"), "--gt", str(fx / "loss_target.nii"),
        "--mode", "topocp", "--lambda", "0",
    )
    _, out_b, _ = run_cli(
        capsys, "loss", "--pred", str(fx / "loss_pred.nii"), "--gt", str(fx / "loss_target.nii"),
        "--mode", "baseline",
    )
    assert out_a.splitlines()[0] == out_b.splitlines()[0]


def test_eval_identity_through_cli(fx, capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run_cli(
        capsys, "eval", "--pred", str(fx / "shell_gt.nii"), "--gt", str(fx / "shell_gt.nii"),
        "--report", str(report),
    )
    assert code == 0
    row = json.loads(report.read_text())[0]
    assert row["dsc"] == 1.0
    assert row["assd_mm"] == 0.0
    assert row["bne1"] == 0
    assert row["hole_ratio"] == 0.0


def test_eval_matches_library(fx, capsys, tmp_path):
    report = tmp_path / "r.json"
    code, _, _ = run_cli(
        capsys, "eval", "--pred", str(fx / "shell_channel.nii"), "--gt", str(fx / "shell_gt.nii"),
        "--report", str(report), "--csv", str(tmp_path / "r.csv"),
    )
    assert code == 0
    pred, gt = shell_pair("channel")
    ref = evaluate_pair(largest_cc(pred), gt, spacing=(1.0, 1.0, 1.0), subject_id="shell_channel")
    row = json.loads(report.read_text())[0]
    assert row["dsc"] == ref.dsc
    assert row["assd_mm"] == ref.assd_mm
    assert row["hole_ratio"] == ref.hole_ratio == 2 / 316
    assert row["fn_holes"] == ref.fn_holes_count
    assert (tmp_path / "r.csv").exists()


def test_eval_no_lcc_flag(fx, capsys, tmp_path):
    # pred with a far speck: lcc removes it by default, --no-lcc keeps it
    pred, gt = shell_pair("channel")
    speck = pred.values.copy()
    gt2 = gt.values.copy()
    pad = np.zeros((7, 7, 7), dtype=np.uint8)
    pred_big = np.concatenate([speck, pad], axis=0)
    gt_big = np.concatenate([gt2, pad], axis=0)
    pred_big[13, 3, 3] = 1  # lone false positive far from the shell
    d = tmp_path
    write_volume(BinaryMask(pred_big), d / "p.nii")
    write_volume(BinaryMask(gt_big), d / "g.nii")
    code, _, _ = run_cli(capsys, "eval", "--pred", str(d / "p.nii"), "--gt", str(d / "g.nii"),
                         "--report", str(d / "a.json"))
    assert code == 0
    code, _, _ = run_cli(capsys, "eval", "--pred", str(d / "p.nii"), "--gt", str(d / "g.nii"),
                         "--report", str(d / "b.json"), "--no-lcc")
    assert code == 0
    a = json.loads((d / "a.json").read_text())[0]
    b = json.loads((d / "b.json").read_text())[0]
    assert a["fp"] == 0  # speck removed by largest_cc
    assert b["fp"] == 1


def test_eval_strict_exit_code_4(capsys, tmp_path):
    empty = BinaryMask(np.zeros((4, 4, 4), dtype=np.uint8))
    write_volume(empty, tmp_path / "e.nii")
    code, _, err = run_cli(
        capsys, "eval", "--pred", str(tmp_path / "e.nii"), "--gt", str(tmp_path / "e.nii"),
        "--report", str(tmp_path / "r.json"), "--strict",
    )
    assert code == 4
    assert "ASSD" in err


def test_eval_batch_dirs(fx, capsys, tmp_path, monkeypatch):
    pred_dir = tmp_path / "preds"
    gt_dir = tmp_path / "gts"
    pred_dir.mkdir()
    gt_dir.mkdir()
    pred, gt = shell_pair("channel")
    for name, (p, g) in {
        "a": (gt, gt),
        "b": (pred, gt),
        "c": (shell_pair("dent")[0], gt),
    }.items():
        write_volume(p, pred_dir / f"{name}.nii")
        write_volume(g, gt_dir / f"{name}.nii")
    monkeypatch.setenv("TOPOCP_THREADS", "2")
    report = tmp_path / "r.json"
    code, out, _ = run_cli(
        capsys, "eval", "--pred-dir", str(pred_dir), "--gt-dir", str(gt_dir),
        "--report", str(report),
    )
    assert code == 0
    rows = json.loads(report.read_text())
    assert [r["subject_id"] for r in rows] == ["a", "b", "c"]  # order stable
    assert rows[0]["dsc"] == 1.0
    assert rows[1]["hole_ratio"] == 2 / 316
    assert rows[2]["hole_ratio"] == 0.0
    assert out.count("dsc=") == 3


def test_patches_and_aggregate_roundtrip(capsys, tmp_path):
    from topocp.fixtures import masked_volume

    vol, mask = masked_volume(21, shape=(30, 30, 30))
    write_volume(vol.values.astype(np.float64), tmp_path / "v.nii")
    write_volume(mask, tmp_path / "m.nii")
    pdir = tmp_path / "patches"
    code, out, _ = run_cli(
        capsys, "patches", "--input", str(tmp_path / "v.nii"), "--mask", str(tmp_path / "m.nii"),
        "--size", "16", "--stride", "8", "--axes", "axial,coronal", "--out", str(pdir),
    )
    assert code == 0
    assert (pdir / "index.json").exists()
    code, out, _ = run_cli(
        capsys, "aggregate", "--patches", str(pdir), "--dims", "30,30,30",
        "--out-prob", str(tmp_path / "p.nii"), "--out-mask", str(tmp_path / "k.nii"),
    )
    assert code == 0
    prob, _ = read_volume(tmp_path / "p.nii")
    m, _ = read_volume(tmp_path / "k.nii")
    assert isinstance(m, BinaryMask)
    assert prob.values.shape == (30, 30, 30)


def test_aggregate_dims_mismatch_rejected(capsys, tmp_path):
    from topocp.fixtures import masked_volume

    vol, mask = masked_volume(22, shape=(20, 20, 20))
    write_volume(vol.values.astype(np.float64), tmp_path / "v.nii")
    write_volume(mask, tmp_path / "m.nii")
    pdir = tmp_path / "patches"
    run_cli(capsys, "patches", "--input", str(tmp_path / "v.nii"), "--mask",
            str(tmp_path / "m.nii"), "--size", "16", "--stride", "16", "--out", str(pdir))
    code, _, err = run_cli(
        capsys, "aggregate", "--patches", str(pdir), "--dims", "99,99,99",
        "--out-prob", str(tmp_path / "p.nii"), "--out-mask", str(tmp_path / "k.nii"),
    )
    assert code == 3
    assert "disagrees" in err


def test_demo_subcommand(fx, capsys, tmp_path):
    traj = tmp_path / "t.csv"
    final = tmp_path / "f.nii"
    code, out, _ = run_cli(
        capsys, "demo", "--target", str(fx / "demo_target.nii"), "--init", str(fx / "demo_init.nii"),
        "--mode", "topocp", "--steps", "120", "--lr", "0.5",
        "--traj", str(traj), "--out", str(final),
    )
    assert code == 0
    assert "bn1 = 1" in out.splitlines()[1]
    rows = traj.read_text().strip().splitlines()
    assert len(rows) == 122
    g, _ = read_volume(final)
    assert isinstance(g, LikelihoodGrid)


def test_exit_codes(fx, capsys, tmp_path):
    code, _, _ = run_cli(capsys, "betti", "--input", str(tmp_path / "missing.nii"))
    assert code == 2
    code, _, _ = run_cli(capsys, "persistence", "--input", str(fx / "ring.nii"),
                         "--mp", "1.5", "--out", str(tmp_path / "x.csv"))
    assert code == 3
    with pytest.raises(SystemExit):
        # -h goes through argparse's SystemExit(0) path
        main(["-h"])
    capsys.readouterr()
    code, _, _ = run_cli(capsys, "not-a-command")
    assert code == 1
    code, _, _ = run_cli(capsys)
    assert code == 1
    code, _, _ = run_cli(capsys, "eval", "--pred", str(fx / "ring.nii"),
                         "--report", str(tmp_path / "r.json"))
    assert code == 1  # --pred without --gt


def test_gen_fixtures_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(capsys, "gen-fixtures", "--out", str(a))[0] == 0
    assert run_cli(capsys, "gen-fixtures", "--out", str(b))[0] == 0
    for f in sorted(a.iterdir()):
        assert (b / f.name).read_bytes() == f.read_bytes(), f.name


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "topocp.cli", "--help"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "betti" in proc.stdout
