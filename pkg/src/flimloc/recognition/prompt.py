"""Prompt rendering and verdict parsing."""

from __future__ import annotations

import hashlib
import math
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import UnknownPlaceholder, UnparseableResponse
from .features import FEATURE_FIELDS, FailureInfo, FeatureVector

DEFAULT_TEMPLATE_ID = "flim-default-v1"
TRUNCATION_MARKER = "[truncated]"
CODE_BUDGET = 4096
TRACE_BUDGET = 2048


@dataclass(frozen=True)
class Prompt:
    rendered: str
    template_id: str
    token_estimate: int


def default_template() -> str:
    return resources.files("flimloc").joinpath("templates/flim_prompt.txt").read_text("utf-8")


def load_template(path: str | Path | None) -> tuple[str, str]:
    """Return ``(template_text, template_id)``; ``None`` selects the bundled one."""
    if path is None:
        return default_template(), DEFAULT_TEMPLATE_ID
    text = Path(path).read_text(encoding="utf-8")
    return text, "custom-" + hashlib.sha256(text.encode()).hexdigest()[:12]


def clip(text: str, budget: int) -> str:
    """Keep at most ``budget`` UTF-8 bytes from the head of ``text``."""
    raw = text.encode("utf-8")
    if len(raw) <= budget:
        return text
    return raw[:budget].decode("utf-8", errors="ignore") + "\n" + TRUNCATION_MARKER


def template_fields(template: str) -> list[str]:
    names = []
    for _, name, _, _ in string.Formatter().parse(template):
        if name is None:
            continue
        if name not in FEATURE_FIELDS:
            raise UnknownPlaceholder(name)
        names.append(name)
    return names


def _failures_text(failures: tuple[FailureInfo, ...], trace_budget: int) -> str:
    if not failures:
        return "(none)"
    blocks = []
    for f in failures:
        lines = [f"- {f.test_id}: {clip(f.error_message, trace_budget) or '(no message)'}"]
        if f.stack_trace:
            trace = clip("\n".join(f.stack_trace), trace_budget)
            lines.extend("    " + ln for ln in trace.splitlines())
        blocks.append("\n".join(lines))
    return "\n".join(blocks)


def _diffs_text(diffs: tuple[tuple[str, str], ...], budget: int) -> str:
    if not diffs:
        return "(none)"
    blocks = []
    for tid, diff in diffs:
        blocks.append(f"[{tid}]\n" + (clip(diff, budget) if diff else "(identical)"))
    return "\n".join(blocks)


def render_values(
    features: FeatureVector, code_budget: int = CODE_BUDGET, trace_budget: int = TRACE_BUDGET
) -> dict[str, str]:
    return {
        "mutant_id": features.mutant_id,
        "location": features.location,
        "code_orig": clip(features.code_orig, code_budget),
        "code_mut": clip(features.code_mut, code_budget),
        "code_diff": clip(features.code_diff, code_budget) or "(no textual change)",
        "original_failures": _failures_text(features.original_failures, trace_budget),
        "mutant_failures": _failures_text(features.mutant_failures, trace_budget),
        "error_diffs": _diffs_text(features.error_diffs, trace_budget),
        "trace_diffs": _diffs_text(features.trace_diffs, trace_budget),
    }


def build_prompt(
    features: FeatureVector,
    template: str | None = None,
    template_id: str | None = None,
    code_budget: int = CODE_BUDGET,
    trace_budget: int = TRACE_BUDGET,
) -> Prompt:
    if template is None:
        template, template_id = default_template(), DEFAULT_TEMPLATE_ID
    elif template_id is None:
        template_id = "custom-" + hashlib.sha256(template.encode()).hexdigest()[:12]
    template_fields(template)
    rendered = template.format_map(render_values(features, code_budget, trace_budget))
    return Prompt(rendered, template_id, math.ceil(len(rendered) / 4))


_ANSWER = re.compile(r"answer[*_`]*\s*[:：]", re.IGNORECASE)
_TOKEN = re.compile(r"[\s*_`\"'\[\](){}<>]*(not[\s_-]?flim|flim)(?![a-z0-9])", re.IGNORECASE)


def parse_verdict(raw: str) -> bool:
    """Read the verdict after the last ``ANSWER:`` marker.

    ``FLIM`` -> True, ``NOT_FLIM`` -> False.  Case and markdown decoration
    around the marker and the token are ignored.
    """
    markers = list(_ANSWER.finditer(raw))
    if not markers:
        raise UnparseableResponse(f"no ANSWER marker in response: {raw[:80]!r}")
    m = _TOKEN.match(raw, markers[-1].end())
    if m is None:
        raise UnparseableResponse(f"ANSWER marker not followed by FLIM/NOT_FLIM: {raw[-80:]!r}")
    return not m.group(1).lower().startswith("not")
