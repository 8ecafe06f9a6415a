#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.


"""Integration test configuration."""

import sys
from pathlib import Path

import pytest
import yaml

ROOT = Path(__file__).parent.parent.parent
METADATA = yaml.safe_load((ROOT / "config.yaml").read_text())
OPTIONS = METADATA["options"]


@pytest.fixture(scope="session")
def bose2d() -> list[str]:
    """Command prefix running the command line in a fresh interpreter."""
    return [sys.executable, str(ROOT / "src" / "cli.py")]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Scratch directory shared by the tests of a module."""
    return tmp_path_factory.mktemp("bose2d")


@pytest.fixture(scope="session")
def configs() -> Path:
    """Directory of the shipped sweep descriptions."""
    return ROOT / "configs"
