#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.


"""Integration test utility functions."""

import csv
import json
import os
import subprocess
from pathlib import Path

SRC_PATH = Path(__file__).parent.parent.parent / "src"


def run_bose2d(
    command: list[str], args: list[str], threads: int | None = None
) -> subprocess.CompletedProcess:
    """Run the command line in a subprocess.

    Args:
        command: Interpreter and script prefix.
        args: Command line arguments.
        threads: Value of BOSE2D_THREADS, left unset when None.

    Returns:
        The finished process with captured text output.
    """
    env = os.environ.copy()
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [str(SRC_PATH), env.get("PYTHONPATH")]))
    env.pop("BOSE2D_THREADS", None)
    if threads is not None:
        env["BOSE2D_THREADS"] = str(threads)

    return subprocess.run(
        command + args, env=env, capture_output=True, text=True, check=False, timeout=1800
    )


def read_rows(output: Path) -> list[dict[str, str]]:
    """Read rows.csv of a sweep output directory.

    Args:
        output: The sweep output directory.

    Returns:
        One mapping per row, keyed by column.
    """
    with open(output / "rows.csv", newline="") as rows:
        return list(csv.DictReader(rows))


def read_report(output: Path) -> dict:
    """Read report.json of a sweep output directory.

    Args:
        output: The sweep output directory.

    Returns:
        The decoded report.
    """
    return json.loads((output / "report.json").read_text())
