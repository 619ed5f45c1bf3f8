"""End-to-end runs: plain MBFL, SBFL, and MBFL with interference mitigation,
plus the comparison report that evaluates several of them side by side."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .confidence import Algorithm, ConfidenceConfig
from .errors import DegenerateMatrix, InvalidDenominator, InvalidParams, MissingGroundTruth
from .ingest import Bundle
from .mbfl import FormulaConfig, RankedEntities, ScoredMutant, mbfl_ranking, sbfl_ranking, score_mutants
from .metrics import exam, executable_count, first_faulty_rank, mfr, top_n
from .mitigation import final_ranking, mitigate_binary, mitigate_confidence, mitigation_confidence
from .recognition import DecisionMatrix, Recognizer, make_recognizer, recognize

log = logging.getLogger(__name__)

METHODS = ("sbfl", "mbfl", "flim")
MITIGATIONS = ("binary", "confidence")
DECIMALS = 4


@dataclass(frozen=True)
class Variant:
    name: str
    method: str = "mbfl"
    recognizer: str = "null"
    mitigation: str = "binary"
    confidence: ConfidenceConfig = field(default_factory=ConfidenceConfig)
    runs: int = 1
    endpoint: str | None = None
    replay: str | None = None
    model: str = "default"
    temperature: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParams(f"unknown method {self.method!r}")
        if self.mitigation not in MITIGATIONS:
            raise InvalidParams(f"unknown mitigation {self.mitigation!r}")
        if self.runs < 1:
            raise InvalidParams("runs must be >= 1")
        if self.method == "flim" and self.recognizer == "remote" and not self.endpoint:
            raise InvalidParams("remote recognizer requires an endpoint")
        if self.method == "flim" and self.recognizer == "replay" and not self.replay:
            raise InvalidParams("replay recognizer requires a replay file")


def parse_variant(spec: str, **defaults) -> Variant:
    """Build a variant from shorthand.

    ``sbfl`` | ``mbfl`` | ``flim-<recognizer>[:<ebw|cbw|pca>]``.  A confidence
    suffix switches mitigation to confidence mode; other settings (runs,
    replay file, endpoint...) come from ``defaults``.
    """
    spec = spec.strip()
    base, _, conf = spec.partition(":")
    if base in ("sbfl", "mbfl"):
        if conf:
            raise InvalidParams(f"{base} takes no confidence suffix: {spec!r}")
        return Variant(name=spec, method=base, **{k: v for k, v in defaults.items() if k in ("runs",)})
    if not base.startswith("flim-"):
        raise InvalidParams(f"unknown variant {spec!r}")
    kw = dict(defaults)
    kw["recognizer"] = base[len("flim-"):]
    if conf:
        kw["mitigation"] = "confidence"
        try:
            kw["confidence"] = replace(kw.get("confidence", ConfidenceConfig()), algorithm=Algorithm(conf))
        except ValueError:
            raise InvalidParams(f"unknown confidence algorithm {conf!r}") from None
    return Variant(name=spec, method="flim", **kw)


@dataclass
class RunResult:
    bundle: Bundle
    ranked: RankedEntities
    scores: list[ScoredMutant] = field(default_factory=list)
    refined: list[ScoredMutant] = field(default_factory=list)
    decisions: DecisionMatrix | None = None
    confidence: dict[str, float] | None = None


def build_recognizer(variant: Variant, parse_retries: int = 3) -> Recognizer:
    return make_recognizer(
        variant.recognizer,
        endpoint=variant.endpoint,
        replay=variant.replay,
        model=variant.model,
        temperature=variant.temperature,
        max_retries=parse_retries,
        seed=variant.seed,
    )


def run_bundle(
    bundle: Bundle,
    variant: Variant,
    formula: FormulaConfig = FormulaConfig(),
    recognizer: Recognizer | None = None,
    jobs: int = 1,
    parse_retries: int = 3,
    template: str | None = None,
    template_id: str | None = None,
) -> RunResult:
    if variant.method == "sbfl":
        return RunResult(bundle, sbfl_ranking(bundle, formula))
    scores = score_mutants(bundle, formula)
    if variant.method == "mbfl":
        return RunResult(bundle, mbfl_ranking(bundle, formula), scores, scores)

    if variant.recognizer == "oracle" and bundle.ground_truth is None:
        raise MissingGroundTruth(bundle.version_id)
    owned = recognizer is None
    rec = recognizer or build_recognizer(variant, parse_retries)
    try:
        decisions = recognize(
            bundle, rec, variant.runs, template, template_id, jobs=jobs, parse_retries=parse_retries
        )
    finally:
        if owned:
            rec.close()

    phi = None
    if variant.mitigation == "binary":
        refined = mitigate_binary(scores, decisions.majority())
    else:
        conf = variant.confidence
        if conf.algorithm is Algorithm.PCA and len(decisions.mutant_ids) < 2:
            log.warning("%s: fewer than two mutants, PCA confidence falls back to CBW", bundle.version_id)
            conf = replace(conf, algorithm=Algorithm.CBW)
        try:
            phi = mitigation_confidence(decisions, conf)
        except DegenerateMatrix:
            phi = mitigation_confidence(decisions, replace(conf, algorithm=Algorithm.CBW))
        refined = mitigate_confidence(scores, phi)
    return RunResult(bundle, final_ranking(bundle, refined), scores, refined, decisions, phi)


def run_variant(
    bundles: Sequence[Bundle],
    variant: Variant,
    formula: FormulaConfig = FormulaConfig(),
    jobs: int = 1,
    parse_retries: int = 3,
    template: str | None = None,
    template_id: str | None = None,
) -> list[RunResult]:
    rec = build_recognizer(variant, parse_retries) if variant.method == "flim" else None
    try:
        return [
            run_bundle(b, variant, formula, rec, jobs, parse_retries, template, template_id)
            for b in bundles
        ]
    finally:
        if rec is not None:
            rec.close()


# --------------------------------------------------------------------------
# evaluation


@dataclass
class EvalReport:
    name: str
    top1: int
    top3: int
    top5: int
    mfr: float
    first_ranks: dict[str, float]
    exam_per_fault: list[tuple[str, float | None]]
    ranked: dict[str, RankedEntities]


def evaluate(name: str, results: Sequence[RunResult], ties: str = "average") -> EvalReport:
    ranked = {r.bundle.version_id: r.ranked for r in results}
    truths = {r.bundle.version_id: r.bundle.ground_truth for r in results}
    exams = []
    for r in results:
        vid = r.bundle.version_id
        try:
            exams.append((vid, exam(r.ranked, r.bundle.ground_truth, executable_count(r.bundle))))
        except InvalidDenominator as exc:
            log.warning("%s: EXAM undefined (%s)", vid, exc)
            exams.append((vid, None))
    return EvalReport(
        name=name,
        top1=top_n(ranked, truths, 1, ties),
        top3=top_n(ranked, truths, 3, ties),
        top5=top_n(ranked, truths, 5, ties),
        mfr=mfr(ranked, truths),
        first_ranks={v: first_faulty_rank(ranked[v], truths[v]) for v in ranked},
        exam_per_fault=exams,
        ranked=ranked,
    )


def _r(x: float | None) -> float | None:
    return None if x is None else round(float(x), DECIMALS)


def ranking_json(results: Iterable[RunResult], formula: FormulaConfig) -> dict:
    return {
        "formula": formula.formula.value,
        "versions": [
            {
                "version": r.bundle.version_id,
                "entities": [
                    {"entity_id": e.entity_id, "sus": _r(e.sus), "rank": e.rank} for e in r.ranked
                ],
            }
            for r in sorted(results, key=lambda r: r.bundle.version_id)
        ],
    }


def decisions_json(results: Iterable[RunResult]) -> dict:
    return {
        "versions": [
            {"version": r.bundle.version_id, **r.decisions.to_json()}
            for r in sorted(results, key=lambda r: r.bundle.version_id)
            if r.decisions is not None
        ]
    }


def report_json(reports: Sequence[EvalReport], formula: FormulaConfig) -> dict:
    per_version = []
    for rep in reports:
        exams = dict(rep.exam_per_fault)
        for vid in sorted(rep.ranked):
            per_version.append(
                {
                    "variant": rep.name,
                    "version": vid,
                    "first_faulty_rank": rep.first_ranks[vid],
                    "exam": _r(exams.get(vid)),
                }
            )
    return {
        "formula": formula.formula.value,
        "variants": [
            {
                "name": rep.name,
                "top1": rep.top1,
                "top3": rep.top3,
                "top5": rep.top5,
                "mfr": _r(rep.mfr),
                "exam": [{"version": v, "exam": _r(x)} for v, x in sorted(rep.exam_per_fault)],
            }
            for rep in reports
        ],
        "per_version": per_version,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.{DECIMALS}f}"
    return str(x)


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def report_table(reports: Sequence[EvalReport]) -> str:
    rows = []
    for rep in reports:
        exams = [x for _, x in rep.exam_per_fault if x is not None]
        mean_exam = sum(exams) / len(exams) if exams else None
        rows.append([rep.name, rep.top1, rep.top3, rep.top5, rep.mfr, mean_exam])
    return format_table(["variant", "top1", "top3", "top5", "mfr", "exam(mean)"], rows)


def ranking_table(results: Sequence[RunResult]) -> str:
    rows = [
        [r.bundle.version_id, e.entity_id, e.sus, e.rank]
        for r in sorted(results, key=lambda r: r.bundle.version_id)
        for e in r.ranked
    ]
    return format_table(["version", "entity", "sus", "rank"], rows)


def compare_report(
    bundles: Sequence[Bundle],
    variants: Sequence[Variant],
    formula: FormulaConfig = FormulaConfig(),
    jobs: int = 1,
    parse_retries: int = 3,
    ties: str = "average",
    template: str | None = None,
    template_id: str | None = None,
) -> tuple[list[EvalReport], dict, str]:
    """Evaluate each variant over all bundles.

    Returns the reports, the ``report.json`` document and the text table.
    """
    if not variants:
        raise InvalidParams("at least one variant is required")
    if not bundles:
        raise InvalidParams("at least one bundle is required")
    for b in bundles:
        if b.ground_truth is None:
            raise MissingGroundTruth(b.version_id)
    reports = [
        evaluate(v.name, run_variant(bundles, v, formula, jobs, parse_retries, template, template_id), ties)
        for v in variants
    ]
    return reports, report_json(reports, formula), report_table(reports)
