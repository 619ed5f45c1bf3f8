"""Suspiciousness refinement for recognized interference mutants."""

from __future__ import annotations

from typing import Iterable, Mapping

from .confidence import Algorithm, ConfidenceConfig, confidence
from .ingest import Bundle
from .mbfl import RankedEntities, ScoredMutant, entity_scores, rank_entities
from .recognition.engine import DecisionMatrix


def _lookup(table: Mapping[str, float], mutant_id: str, what: str):
    try:
        return table[mutant_id]
    except KeyError:
        raise ValueError(f"{what} missing for mutant {mutant_id!r}") from None


def mitigate_binary(scores: Iterable[ScoredMutant], decisions: Mapping[str, bool]) -> list[ScoredMutant]:
    """Zero the score of every mutant judged an interference mutant."""
    out = []
    for s in scores:
        flim = bool(_lookup(decisions, s.mutant_id, "decision"))
        out.append(ScoredMutant(s.mutant_id, s.entity_id, s.sus * (1 - int(flim))))
    return out


def mitigate_confidence(scores: Iterable[ScoredMutant], phi: Mapping[str, float]) -> list[ScoredMutant]:
    """Scale each score by ``1 - phi``."""
    out = []
    for s in scores:
        c = float(_lookup(phi, s.mutant_id, "confidence"))
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"confidence for {s.mutant_id!r} outside [0, 1]: {c}")
        out.append(ScoredMutant(s.mutant_id, s.entity_id, s.sus * (1.0 - c)))
    return out


def mitigation_confidence(matrix: DecisionMatrix, config: ConfidenceConfig) -> dict[str, float]:
    """Confidence values as used for mitigation.

    EBW only says how consistent the runs were, not in which direction, so
    its value is kept only where the majority of runs said FLIM.
    """
    phi = confidence(matrix, config)
    if config.algorithm is Algorithm.EBW:
        majority = matrix.majority()
        phi = {m: (v if majority[m] else 0.0) for m, v in phi.items()}
    return phi


def final_ranking(bundle: Bundle, refined: Iterable[ScoredMutant]) -> RankedEntities:
    return rank_entities(entity_scores(bundle, refined, "max"))
