"""Subprocess plumbing: locate the core CLI and exchange volumes with it.

The binding never imports the core package. Each call writes its inputs to a
private temporary directory, invokes the `topocp` command-line tool, and reads
the outputs back. One process per call means no shared state and no host
interpreter lock held while the core computes.
"""
import os
import shlex
import shutil
import subprocess
import sys

_ENV_OVERRIDE = "TOPOCP_CLI"


def cli_command():
    """Resolve the core CLI invocation, cheapest viable option first."""
    override = os.environ.get(_ENV_OVERRIDE)
    if override:
        return shlex.split(override)
    exe = shutil.which("topocp")
    if exe:
        return [exe]
    return [sys.executable, "-m", "topocp.cli"]


def run(args, cwd=None) -> str:
    cmd = cli_command() + list(args)
    proc = subprocess.run(
        cmd, cwd=cwd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True
    )
    if proc.returncode != 0:
        detail = proc.stderr.strip() or proc.stdout.strip()
        raise RuntimeError(
            f"core CLI failed (exit {proc.returncode}): {detail or 'no diagnostics'}"
        )
    return proc.stdout
