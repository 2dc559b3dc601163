from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from specrepair.analysis import build_index
from specrepair.cli import demo_dir

from helpers import FIXTURE_ROOT


@pytest.fixture(scope="session")
def fixture_root() -> Path:
    return FIXTURE_ROOT


@pytest.fixture(scope="session")
def fixture_index():
    return build_index(FIXTURE_ROOT)


@pytest.fixture(scope="session")
def demo() -> Path:
    return demo_dir()


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    """A private copy of the fixture tree that tests may modify."""
    dest = tmp_path / "ws"
    shutil.copytree(FIXTURE_ROOT, dest)
    return dest
