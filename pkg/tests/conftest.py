import json
import shutil
from pathlib import Path

import pytest

from flimloc.ingest import parse_bundle

FIXTURES = Path(__file__).parent / "fixtures"
MOTIVATING = FIXTURES / "motivating"
MOTIVATING_REPLAY = FIXTURES / "motivating_replay.jsonl"


@pytest.fixture
def motivating_dir():
    return MOTIVATING


@pytest.fixture(scope="session")
def motivating():
    return parse_bundle(MOTIVATING)


@pytest.fixture
def bundle_copy(tmp_path):
    """Copy the motivating-example bundle into tmp and return (dir, edit) where
    ``edit(name, fn)`` rewrites one JSON file through ``fn(doc) -> doc``."""
    root = tmp_path / "bundle"
    shutil.copytree(MOTIVATING, root)

    def edit(name, fn):
        path = root / name
        doc = json.loads(path.read_text()) if path.exists() else None
        new = fn(doc)
        if new is None:
            path.unlink()
        else:
            path.write_text(json.dumps(new, indent=2))

    return root, edit


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
