"""Shared fixtures: crates copied to tmp dirs plus tree hashing."""

import hashlib
import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# directories that never count as crate sources
IGNORED = {"target", ".safelift"}


def copy_crate(name: str, dest: Path) -> Path:
    shutil.copytree(FIXTURES / name, dest, ignore=shutil.ignore_patterns(*IGNORED))
    return dest


def tree_bytes(root: Path) -> dict[str, bytes]:
    out = {}
    for p in sorted(Path(root).rglob("*.rs")):
        rel = p.relative_to(root)
        if any(part in IGNORED for part in rel.parts):
            continue
        out[rel.as_posix()] = p.read_bytes()
    return out


def tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for rel, data in tree_bytes(root).items():
        h.update(rel.encode())
        h.update(data)
    return h.hexdigest()


@pytest.fixture
def minicrate(tmp_path):
    return copy_crate("minicrate", tmp_path / "minicrate")


@pytest.fixture
def qsort_crate(tmp_path):
    return copy_crate("qsort", tmp_path / "qsort")


@pytest.fixture
def handtrace_crate():
    # read-only uses only; no copy needed
    return FIXTURES / "handtrace"
