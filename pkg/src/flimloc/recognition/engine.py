from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import RecognizerError, RecognizerUnavailable, UnparseableResponse
from ..ingest import Bundle, killed_by_failing, partition_tests
from .features import extract_features
from .prompt import Prompt, build_prompt, parse_verdict
from .recognizers import Recognizer, Request

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Verdict:
    mutant_id: str
    run_index: int
    is_flim: bool
    raw_response: str


@dataclass(frozen=True)
class DecisionMatrix:
    mutant_ids: tuple[str, ...]
    K: int
    cells: tuple[tuple[bool, ...], ...]
    submitted: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if len(self.cells) != len(self.mutant_ids):
            raise ValueError("one row per mutant required")
        if any(len(row) != self.K for row in self.cells):
            raise ValueError(f"every row needs exactly {self.K} decisions")

    def row(self, mutant_id: str) -> tuple[bool, ...]:
        return self.cells[self.mutant_ids.index(mutant_id)]

    def majority(self) -> dict[str, bool]:
        """Strict majority per mutant; an even split counts as not-FLIM."""
        return {m: 2 * sum(row) > self.K for m, row in zip(self.mutant_ids, self.cells)}

    def as_array(self) -> np.ndarray:
        return np.array(self.cells, dtype=float).reshape(len(self.mutant_ids), self.K)

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "mutants": [
                {
                    "mutant_id": m,
                    "submitted": m in self.submitted,
                    "decisions": [int(c) for c in row],
                }
                for m, row in zip(self.mutant_ids, self.cells)
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DecisionMatrix":
        rows = doc["mutants"]
        return cls(
            tuple(r["mutant_id"] for r in rows),
            int(doc["K"]),
            tuple(tuple(bool(c) for c in r["decisions"]) for r in rows),
            frozenset(r["mutant_id"] for r in rows if r.get("submitted")),
        )


def submittable(bundle: Bundle) -> list[str]:
    """Mutants killed by at least one failing test, sorted by id.  Nothing
    else can be an interference mutant, so nothing else is asked about."""
    _, failing = partition_tests(bundle)
    return sorted(m.mutant_id for m in bundle.mutants if killed_by_failing(m, failing))


def _ask(recognizer: Recognizer, request: Request, parse_retries: int, default: bool) -> Verdict:
    raw = ""
    for attempt in range(parse_retries + 1):
        raw = recognizer.respond(request)
        try:
            return Verdict(request.mutant_id, request.run_index, parse_verdict(raw), raw)
        except UnparseableResponse:
            continue
    log.warning(
        "unparseable response for %s run %d after %d attempts; recording %s",
        request.mutant_id, request.run_index, parse_retries + 1,
        "FLIM" if default else "NOT_FLIM",
    )
    return Verdict(request.mutant_id, request.run_index, default, raw)


def recognize(
    bundle: Bundle,
    recognizer: Recognizer,
    K: int = 1,
    template: str | None = None,
    template_id: str | None = None,
    jobs: int = 1,
    parse_retries: int = 3,
    default: bool = False,
) -> DecisionMatrix:
    if K < 1:
        raise ValueError("K must be >= 1")
    mutant_ids = tuple(sorted(m.mutant_id for m in bundle.mutants))
    to_ask = submittable(bundle)
    prompts: dict[str, Prompt] = {
        m: build_prompt(extract_features(bundle, m), template, template_id) for m in to_ask
    }
    requests = [Request(bundle, m, j, prompts[m]) for m in to_ask for j in range(K)]

    def call(req: Request):
        try:
            return req, _ask(recognizer, req, parse_retries, default), None
        except RecognizerError as exc:
            return req, None, str(exc)

    if jobs > 1 and len(requests) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(call, requests))
    else:
        results = [call(r) for r in requests]

    answers: dict[tuple[str, int], bool] = {}
    failures: dict[tuple[str, int], str] = {}
    for req, verdict, err in results:
        key = (req.mutant_id, req.run_index)
        if err is not None:
            failures[key] = err
        else:
            answers[key] = verdict.is_flim
    if failures:
        raise RecognizerUnavailable(failures)

    cells = tuple(
        tuple(answers.get((m, j), False) for j in range(K)) for m in mutant_ids
    )
    return DecisionMatrix(mutant_ids, K, cells, frozenset(to_ask))
