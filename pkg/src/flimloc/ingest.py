"""Bundle data model and the directory-of-JSON reader/writer.

A bundle is one program version: its tests, entities, coverage, mutants and
the precomputed mutant x test kill matrix. The reader validates every
cross-reference so downstream code can index freely.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import (
    DanglingReference,
    MissingFile,
    NoFailingTests,
    SchemaViolation,
)

log = logging.getLogger(__name__)

TESTS_FILE = "tests.json"
ENTITIES_FILE = "entities.json"
COVERAGE_FILE = "coverage.json"
MUTANTS_FILE = "mutants.json"
KILLS_FILE = "kills.json"
GROUND_TRUTH_FILE = "ground_truth.json"
METADATA_FILE = "metadata.json"

REQUIRED_FILES = (TESTS_FILE, ENTITIES_FILE, COVERAGE_FILE, MUTANTS_FILE, KILLS_FILE)
KILL_MODES = ("weak", "strong")


class Outcome(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class TestRecord:
    __test__ = False  # keep pytest from collecting this

    test_id: str
    outcome: Outcome
    error_message: str | None = None
    stack_trace: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Entity:
    entity_id: str
    file: str
    line_start: int
    line_end: int
    executable: bool | None = None

    @property
    def source_ref(self) -> str:
        if self.line_start == self.line_end:
            return f"{self.file}:{self.line_start}"
        return f"{self.file}:{self.line_start}-{self.line_end}"


@dataclass(frozen=True)
class CoverageMatrix:
    entities: tuple[str, ...]
    tests: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...]

    @cached_property
    def _covered(self) -> dict[str, frozenset[str]]:
        return {
            e: frozenset(t for t, bit in zip(self.tests, row) if bit)
            for e, row in zip(self.entities, self.matrix)
        }

    def covering_tests(self, entity_id: str) -> frozenset[str]:
        return self._covered.get(entity_id, frozenset())


@dataclass(frozen=True)
class KillCell:
    killed: bool
    outcome: Outcome
    error_message: str | None = None
    stack_trace: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Mutant:
    mutant_id: str
    entity_id: str
    operator: str
    code_orig: str
    code_mut: str
    kills: Mapping[str, KillCell] = field(default_factory=dict, compare=False)

    @property
    def location(self) -> str:
        return self.entity_id


@dataclass(frozen=True)
class FaultGroundTruth:
    faulty_entities: tuple[str, ...]

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.faulty_set

    @cached_property
    def faulty_set(self) -> frozenset[str]:
        return frozenset(self.faulty_entities)


@dataclass(frozen=True)
class Bundle:
    tests: tuple[TestRecord, ...]
    entities: tuple[Entity, ...]
    coverage: CoverageMatrix
    mutants: tuple[Mutant, ...]
    kill_mutant_order: tuple[str, ...]
    kill_test_order: tuple[str, ...]
    ground_truth: FaultGroundTruth | None = None
    subject: str | None = None
    version: str | None = None
    name: str = "bundle"
    kill_mode: str = "weak"

    @cached_property
    def test_by_id(self) -> dict[str, TestRecord]:
        return {t.test_id: t for t in self.tests}

    @cached_property
    def entity_by_id(self) -> dict[str, Entity]:
        return {e.entity_id: e for e in self.entities}

    @cached_property
    def mutant_by_id(self) -> dict[str, Mutant]:
        return {m.mutant_id: m for m in self.mutants}

    @property
    def version_id(self) -> str:
        base = self.subject or self.name
        return f"{base}-{self.version}" if self.version else base

    def mutants_at(self, entity_id: str) -> list[Mutant]:
        return [m for m in self.mutants if m.entity_id == entity_id]


# --------------------------------------------------------------------------
# reading


def _read_json(root: Path, name: str, required: bool = True) -> tuple[Any, str] | None:
    path = root / name
    if not path.is_file():
        if required:
            raise MissingFile(path)
        return None
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise SchemaViolation(name, exc.lineno, f"invalid JSON: {exc.msg}") from None


def _element_lines(text: str) -> list[int]:
    """1-based line of each element of a top-level JSON array."""
    decoder = json.JSONDecoder()
    pos = text.index("[") + 1
    lines = []
    n = len(text)
    while True:
        while pos < n and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= n or text[pos] == "]":
            return lines
        lines.append(text.count("\n", 0, pos) + 1)
        _, pos = decoder.raw_decode(text, pos)


def _records(data: Any, text: str, name: str) -> list[tuple[int | None, dict]]:
    if not isinstance(data, list):
        raise SchemaViolation(name, 1, "top-level value must be an array")
    lines = _element_lines(text)
    out = []
    for i, rec in enumerate(data):
        line = lines[i] if i < len(lines) else None
        if not isinstance(rec, dict):
            raise SchemaViolation(name, line, f"record {i} is not an object")
        out.append((line, rec))
    return out


def _req(rec: dict, key: str, kind, name: str, line: int | None):
    if key not in rec:
        raise SchemaViolation(name, line, f"missing field {key!r}")
    val = rec[key]
    if kind is int and isinstance(val, bool):
        raise SchemaViolation(name, line, f"field {key!r} must be int")
    if not isinstance(val, kind):
        raise SchemaViolation(name, line, f"field {key!r} has wrong type {type(val).__name__}")
    return val


def _opt_str(rec: dict, key: str, name: str, line: int | None) -> str | None:
    val = rec.get(key)
    if val is not None and not isinstance(val, str):
        raise SchemaViolation(name, line, f"field {key!r} must be a string")
    return val


def _opt_trace(rec: dict, name: str, line: int | None) -> tuple[str, ...] | None:
    val = rec.get("stack_trace")
    if val is None:
        return None
    if not isinstance(val, list) or not all(isinstance(f, str) for f in val):
        raise SchemaViolation(name, line, "stack_trace must be a list of strings")
    return tuple(val)


def _outcome(rec: dict, name: str, line: int | None) -> Outcome:
    raw = _req(rec, "outcome", str, name, line)
    try:
        return Outcome(raw)
    except ValueError:
        raise SchemaViolation(name, line, f"outcome must be 'pass' or 'fail', got {raw!r}") from None


def _unique(ids: Iterable[str], name: str, what: str) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise SchemaViolation(name, None, f"duplicate {what} {i!r}")
        seen.add(i)


def _parse_tests(root: Path) -> tuple[TestRecord, ...]:
    data, text = _read_json(root, TESTS_FILE)
    tests, seen = [], set()
    for line, rec in _records(data, text, TESTS_FILE):
        tid = _req(rec, "test_id", str, TESTS_FILE, line)
        if tid in seen:
            raise SchemaViolation(TESTS_FILE, line, f"duplicate test_id {tid!r}")
        seen.add(tid)
        outcome = _outcome(rec, TESTS_FILE, line)
        if outcome is Outcome.FAIL and "error_message" not in rec:
            raise SchemaViolation(TESTS_FILE, line, f"failing test {tid!r} lacks error_message")
        tests.append(
            TestRecord(
                tid,
                outcome,
                _opt_str(rec, "error_message", TESTS_FILE, line),
                _opt_trace(rec, TESTS_FILE, line),
            )
        )
    return tuple(tests)


def _parse_entities(root: Path) -> tuple[Entity, ...]:
    data, text = _read_json(root, ENTITIES_FILE)
    out, seen = [], set()
    for line, rec in _records(data, text, ENTITIES_FILE):
        eid = _req(rec, "entity_id", str, ENTITIES_FILE, line)
        if eid in seen:
            raise SchemaViolation(ENTITIES_FILE, line, f"duplicate entity_id {eid!r}")
        seen.add(eid)
        start = _req(rec, "line_start", int, ENTITIES_FILE, line)
        end = _req(rec, "line_end", int, ENTITIES_FILE, line)
        if end < start:
            raise SchemaViolation(ENTITIES_FILE, line, "line_end precedes line_start")
        executable = rec.get("executable")
        if executable is not None and not isinstance(executable, bool):
            raise SchemaViolation(ENTITIES_FILE, line, "executable must be a boolean")
        out.append(Entity(eid, _req(rec, "file", str, ENTITIES_FILE, line), start, end, executable))
    return tuple(out)


def _parse_coverage(root: Path, entity_ids: set[str], test_ids: set[str]) -> CoverageMatrix:
    data, _ = _read_json(root, COVERAGE_FILE)
    if not isinstance(data, dict):
        raise SchemaViolation(COVERAGE_FILE, 1, "top-level value must be an object")
    ents = _req(data, "entities", list, COVERAGE_FILE, None)
    tests = _req(data, "tests", list, COVERAGE_FILE, None)
    matrix = _req(data, "matrix", list, COVERAGE_FILE, None)
    _unique(ents, COVERAGE_FILE, "entity")
    _unique(tests, COVERAGE_FILE, "test")
    for e in ents:
        if e not in entity_ids:
            raise DanglingReference("entity", e, COVERAGE_FILE)
    for t in tests:
        if t not in test_ids:
            raise DanglingReference("test", t, COVERAGE_FILE)
    if len(matrix) != len(ents):
        raise SchemaViolation(COVERAGE_FILE, None, f"matrix has {len(matrix)} rows, expected {len(ents)}")
    rows = []
    for i, row in enumerate(matrix):
        if not isinstance(row, list) or len(row) != len(tests):
            raise SchemaViolation(COVERAGE_FILE, None, f"matrix row {i} must have {len(tests)} cells")
        if any(c not in (0, 1) or isinstance(c, bool) for c in row):
            raise SchemaViolation(COVERAGE_FILE, None, f"matrix row {i} cells must be 0 or 1")
        rows.append(tuple(row))
    return CoverageMatrix(tuple(ents), tuple(tests), tuple(rows))


def _parse_mutants(root: Path, entity_ids: set[str]) -> list[tuple[int | None, dict]]:
    data, text = _read_json(root, MUTANTS_FILE)
    recs = _records(data, text, MUTANTS_FILE)
    seen = set()
    for line, rec in recs:
        mid = _req(rec, "mutant_id", str, MUTANTS_FILE, line)
        if mid in seen:
            raise SchemaViolation(MUTANTS_FILE, line, f"duplicate mutant_id {mid!r}")
        seen.add(mid)
        eid = _req(rec, "entity_id", str, MUTANTS_FILE, line)
        if eid not in entity_ids:
            raise DanglingReference("entity", eid, MUTANTS_FILE)
        for key in ("operator", "code_orig", "code_mut"):
            _req(rec, key, str, MUTANTS_FILE, line)
    return recs


def _parse_kill_cell(raw: Any, where: str) -> KillCell:
    if not isinstance(raw, dict):
        raise SchemaViolation(KILLS_FILE, None, f"{where}: cell must be an object")
    killed = raw.get("killed")
    if not isinstance(killed, bool):
        raise SchemaViolation(KILLS_FILE, None, f"{where}: 'killed' must be a boolean")
    try:
        outcome = Outcome(raw.get("outcome"))
    except ValueError:
        raise SchemaViolation(KILLS_FILE, None, f"{where}: outcome must be 'pass' or 'fail'") from None
    msg = raw.get("error_message")
    if msg is not None and not isinstance(msg, str):
        raise SchemaViolation(KILLS_FILE, None, f"{where}: error_message must be a string")
    trace = raw.get("stack_trace")
    if trace is not None:
        if not isinstance(trace, list) or not all(isinstance(f, str) for f in trace):
            raise SchemaViolation(KILLS_FILE, None, f"{where}: stack_trace must be a list of strings")
        trace = tuple(trace)
    return KillCell(killed, outcome, msg, trace)


def _parse_kills(root: Path, mutant_ids: list[str], tests: dict[str, TestRecord]):
    data, _ = _read_json(root, KILLS_FILE)
    if not isinstance(data, dict):
        raise SchemaViolation(KILLS_FILE, 1, "top-level value must be an object")
    k_mutants = _req(data, "mutants", list, KILLS_FILE, None)
    k_tests = _req(data, "tests", list, KILLS_FILE, None)
    cells = _req(data, "cells", list, KILLS_FILE, None)
    _unique(k_mutants, KILLS_FILE, "mutant")
    _unique(k_tests, KILLS_FILE, "test")
    known = set(mutant_ids)
    for m in k_mutants:
        if m not in known:
            raise DanglingReference("mutant", m, KILLS_FILE)
    for t in k_tests:
        if t not in tests:
            raise DanglingReference("test", t, KILLS_FILE)
    missing_m = known - set(k_mutants)
    if missing_m:
        raise SchemaViolation(KILLS_FILE, None, f"no kill row for mutants {sorted(missing_m)}")
    missing_t = set(tests) - set(k_tests)
    if missing_t:
        raise SchemaViolation(KILLS_FILE, None, f"kill matrix lacks tests {sorted(missing_t)}")
    if len(cells) != len(k_mutants):
        raise SchemaViolation(KILLS_FILE, None, f"cells has {len(cells)} rows, expected {len(k_mutants)}")
    rows: dict[str, dict[str, KillCell]] = {}
    for mid, row in zip(k_mutants, cells):
        if not isinstance(row, list) or len(row) != len(k_tests):
            raise SchemaViolation(KILLS_FILE, None, f"row {mid!r} must have {len(k_tests)} cells")
        parsed = {}
        for tid, raw in zip(k_tests, row):
            cell = _parse_kill_cell(raw, f"({mid}, {tid})")
            if cell.outcome is not tests[tid].outcome and not cell.killed:
                raise SchemaViolation(
                    KILLS_FILE, None, f"({mid}, {tid}): outcome flips but cell is not marked killed"
                )
            parsed[tid] = cell
        rows[mid] = parsed
    return tuple(k_mutants), tuple(k_tests), rows


def _parse_ground_truth(root: Path, entity_ids: set[str]) -> FaultGroundTruth | None:
    loaded = _read_json(root, GROUND_TRUTH_FILE, required=False)
    if loaded is None:
        return None
    data, _ = loaded
    if not isinstance(data, dict):
        raise SchemaViolation(GROUND_TRUTH_FILE, 1, "top-level value must be an object")
    faulty = _req(data, "faulty_entities", list, GROUND_TRUTH_FILE, None)
    if not faulty:
        raise SchemaViolation(GROUND_TRUTH_FILE, None, "faulty_entities must be non-empty")
    _unique(faulty, GROUND_TRUTH_FILE, "entity")
    for e in faulty:
        if e not in entity_ids:
            raise DanglingReference("entity", e, GROUND_TRUTH_FILE)
    return FaultGroundTruth(tuple(faulty))


def _parse_metadata(root: Path) -> tuple[str | None, str | None]:
    loaded = _read_json(root, METADATA_FILE, required=False)
    if loaded is None:
        return None, None
    data, _ = loaded
    if not isinstance(data, dict):
        raise SchemaViolation(METADATA_FILE, 1, "top-level value must be an object")
    return _opt_str(data, "subject", METADATA_FILE, None), _opt_str(data, "version", METADATA_FILE, None)


def apply_kill_mode(cell: KillCell, original: TestRecord, mode: str) -> KillCell:
    if mode == "weak":
        return cell
    flipped = cell.outcome is not original.outcome
    if flipped == cell.killed:
        return cell
    return KillCell(flipped, cell.outcome, cell.error_message, cell.stack_trace)


def parse_bundle(root: str | Path, kill_mode: str = "weak") -> Bundle:
    """Load and validate a bundle directory.

    ``kill_mode="strong"`` re-derives every ``killed`` flag as "the test's
    pass/fail status differs from the original program".
    """
    if kill_mode not in KILL_MODES:
        raise ValueError(f"kill_mode must be one of {KILL_MODES}")
    root = Path(root)
    if not root.is_dir():
        raise MissingFile(root)
    for name in REQUIRED_FILES:
        if not (root / name).is_file():
            raise MissingFile(root / name)

    tests = _parse_tests(root)
    if not any(t.outcome is Outcome.FAIL for t in tests):
        raise NoFailingTests()
    test_by_id = {t.test_id: t for t in tests}
    entities = _parse_entities(root)
    entity_ids = {e.entity_id for e in entities}
    coverage = _parse_coverage(root, entity_ids, set(test_by_id))
    mutant_recs = _parse_mutants(root, entity_ids)
    mutant_ids = [rec["mutant_id"] for _, rec in mutant_recs]
    k_mutants, k_tests, kill_rows = _parse_kills(root, mutant_ids, test_by_id)

    failing = {t.test_id for t in tests if t.outcome is Outcome.FAIL}
    mutants = []
    for line, rec in mutant_recs:
        eid = rec["entity_id"]
        if not coverage.covering_tests(eid) & failing:
            raise SchemaViolation(
                MUTANTS_FILE, line, f"mutant {rec['mutant_id']!r} sits on {eid!r}, which no failing test covers"
            )
        row = kill_rows[rec["mutant_id"]]
        kills = {tid: apply_kill_mode(row[tid], test_by_id[tid], kill_mode) for tid in k_tests}
        mutants.append(
            Mutant(rec["mutant_id"], eid, rec["operator"], rec["code_orig"], rec["code_mut"], kills)
        )

    subject, version = _parse_metadata(root)
    return Bundle(
        tests=tests,
        entities=entities,
        coverage=coverage,
        mutants=tuple(mutants),
        kill_mutant_order=k_mutants,
        kill_test_order=k_tests,
        ground_truth=_parse_ground_truth(root, entity_ids),
        subject=subject,
        version=version,
        name=root.resolve().name,
        kill_mode=kill_mode,
    )


# --------------------------------------------------------------------------
# writing


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _trace_out(trace):
    return list(trace) if trace is not None else None


def bundle_to_json(bundle: Bundle) -> dict[str, Any]:
    """File name -> JSON document for every file the bundle was built from."""
    docs: dict[str, Any] = {
        TESTS_FILE: [
            _drop_none(
                {
                    "test_id": t.test_id,
                    "outcome": t.outcome.value,
                    "error_message": t.error_message,
                    "stack_trace": _trace_out(t.stack_trace),
                }
            )
            for t in bundle.tests
        ],
        ENTITIES_FILE: [
            _drop_none(
                {
                    "entity_id": e.entity_id,
                    "file": e.file,
                    "line_start": e.line_start,
                    "line_end": e.line_end,
                    "executable": e.executable,
                }
            )
            for e in bundle.entities
        ],
        COVERAGE_FILE: {
            "entities": list(bundle.coverage.entities),
            "tests": list(bundle.coverage.tests),
            "matrix": [list(r) for r in bundle.coverage.matrix],
        },
        MUTANTS_FILE: [
            {
                "mutant_id": m.mutant_id,
                "entity_id": m.entity_id,
                "operator": m.operator,
                "code_orig": m.code_orig,
                "code_mut": m.code_mut,
            }
            for m in bundle.mutants
        ],
        KILLS_FILE: {
            "mutants": list(bundle.kill_mutant_order),
            "tests": list(bundle.kill_test_order),
            "cells": [
                [
                    _drop_none(
                        {
                            "killed": c.killed,
                            "outcome": c.outcome.value,
                            "error_message": c.error_message,
                            "stack_trace": _trace_out(c.stack_trace),
                        }
                    )
                    for c in (bundle.mutant_by_id[mid].kills[tid] for tid in bundle.kill_test_order)
                ]
                for mid in bundle.kill_mutant_order
            ],
        },
    }
    if bundle.ground_truth is not None:
        docs[GROUND_TRUTH_FILE] = {"faulty_entities": list(bundle.ground_truth.faulty_entities)}
    if bundle.subject is not None or bundle.version is not None:
        docs[METADATA_FILE] = _drop_none({"subject": bundle.subject, "version": bundle.version})
    return docs


def write_bundle(bundle: Bundle, root: str | Path) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for name, doc in bundle_to_json(bundle).items():
        (root / name).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return root


# --------------------------------------------------------------------------
# queries


def partition_tests(bundle: Bundle) -> tuple[frozenset[str], frozenset[str]]:
    """Return ``(passing, failing)`` test-id sets."""
    passing = frozenset(t.test_id for t in bundle.tests if t.outcome is Outcome.PASS)
    failing = frozenset(t.test_id for t in bundle.tests if t.outcome is Outcome.FAIL)
    return passing, failing


def suspicious_entities(bundle: Bundle) -> frozenset[str]:
    _, failing = partition_tests(bundle)
    return frozenset(
        e for e in bundle.coverage.entities if bundle.coverage.covering_tests(e) & failing
    )


def killed_by_failing(mutant: Mutant, failing: Iterable[str]) -> bool:
    return any(mutant.kills[t].killed for t in failing)
