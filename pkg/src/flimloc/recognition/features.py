"""Static and dynamic features of a mutant, as fed to a recognizer."""

from __future__ import annotations

import difflib
from dataclasses import dataclass

from ..errors import UnknownMutant
from ..ingest import Bundle, Outcome, partition_tests


@dataclass(frozen=True)
class FailureInfo:
    test_id: str
    error_message: str
    stack_trace: tuple[str, ...]


@dataclass(frozen=True)
class FeatureVector:
    mutant_id: str
    location: str
    code_orig: str
    code_mut: str
    code_diff: str
    original_failures: tuple[FailureInfo, ...]
    mutant_failures: tuple[FailureInfo, ...]
    error_diffs: tuple[tuple[str, str], ...]
    trace_diffs: tuple[tuple[str, str], ...]


FEATURE_FIELDS = tuple(FeatureVector.__dataclass_fields__)


def text_diff(before: str, after: str) -> str:
    """Unified line diff; empty when the texts are equal."""
    lines = difflib.unified_diff(
        before.splitlines(), after.splitlines(), "original", "mutant", lineterm=""
    )
    return "\n".join(lines)


def extract_features(bundle: Bundle, mutant_id: str) -> FeatureVector:
    try:
        mutant = bundle.mutant_by_id[mutant_id]
    except KeyError:
        raise UnknownMutant(mutant_id) from None
    entity = bundle.entity_by_id[mutant.entity_id]
    _, failing = partition_tests(bundle)
    failing = sorted(failing)

    orig, mut, err_diffs, trace_diffs = [], [], [], []
    for tid in failing:
        rec = bundle.test_by_id[tid]
        cell = mutant.kills[tid]
        orig_msg = rec.error_message or ""
        orig_trace = rec.stack_trace or ()
        orig.append(FailureInfo(tid, orig_msg, orig_trace))
        if cell.outcome is Outcome.FAIL:
            mut_msg = cell.error_message or ""
            mut_trace = cell.stack_trace or ()
            mut.append(FailureInfo(tid, mut_msg, mut_trace))
        else:
            # the mutant made this test pass: no message, no trace
            mut_msg, mut_trace = "", ()
        err_diffs.append((tid, text_diff(orig_msg, mut_msg)))
        trace_diffs.append((tid, text_diff("\n".join(orig_trace), "\n".join(mut_trace))))

    return FeatureVector(
        mutant_id=mutant.mutant_id,
        location=f"{entity.entity_id} ({entity.source_ref})",
        code_orig=mutant.code_orig,
        code_mut=mutant.code_mut,
        code_diff=text_diff(mutant.code_orig, mutant.code_mut),
        original_failures=tuple(orig),
        mutant_failures=tuple(mut),
        error_diffs=tuple(err_diffs),
        trace_diffs=tuple(trace_diffs),
    )
