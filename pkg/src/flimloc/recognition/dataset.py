"""Ground-truth FLIM labels and the JSON-lines fine-tuning export."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from ..errors import MissingGroundTruth
from ..ingest import Bundle
from ..mbfl import FormulaConfig, ScoredMutant, score_mutants
from .engine import submittable
from .features import extract_features
from .prompt import build_prompt


def label_ground_truth(bundle: Bundle, scores: Iterable[ScoredMutant]) -> dict[str, int]:
    """1 for a mutant with non-zero suspiciousness on a non-faulty entity."""
    if bundle.ground_truth is None:
        raise MissingGroundTruth(bundle.version_id)
    truth = bundle.ground_truth
    return {
        s.mutant_id: int(s.sus > 0 and s.entity_id not in truth)
        for s in sorted(scores, key=lambda s: s.mutant_id)
    }


def training_records(
    bundle: Bundle,
    template: str | None = None,
    template_id: str | None = None,
    config: FormulaConfig = FormulaConfig(),
) -> list[dict]:
    labels = label_ground_truth(bundle, score_mutants(bundle, config))
    return [
        {
            "prompt": build_prompt(extract_features(bundle, mid), template, template_id).rendered,
            "label": labels[mid],
            "subject": bundle.subject or bundle.name,
            "version": bundle.version or "",
            "mutant_id": mid,
        }
        for mid in submittable(bundle)
    ]


def export_training_set(
    bundles: Iterable[Bundle],
    template: str | None,
    output: str | Path,
    template_id: str | None = None,
    config: FormulaConfig = FormulaConfig(),
) -> int:
    """Write one record per mutant killed by a failing test.  Every bundle
    is checked for ground truth before anything is written."""
    bundles = list(bundles)
    for b in bundles:
        if b.ground_truth is None:
            raise MissingGroundTruth(b.version_id)
    records = [r for b in bundles for r in training_records(b, template, template_id, config)]
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    with output.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    return len(records)
