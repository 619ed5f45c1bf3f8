"""Top-N, mean first rank and EXAM."""

from __future__ import annotations

from typing import Mapping

from .errors import InvalidDenominator, MissingGroundTruth
from .ingest import Bundle, FaultGroundTruth
from .mbfl import RankedEntities

TIE_POLICIES = ("average", "best")


def first_faulty_rank(
    ranked: RankedEntities, truth: FaultGroundTruth | None, ties: str = "average"
) -> float:
    """Best rank among the faulty entities.

    A faulty entity missing from the ranking (not covered by any failing
    test) is placed just past the end of the list.
    """
    if truth is None:
        raise MissingGroundTruth()
    if ties not in TIE_POLICIES:
        raise ValueError(f"ties must be one of {TIE_POLICIES}")
    worst = float(len(ranked) + 1)
    ranks = []
    for e in truth.faulty_entities:
        r = ranked.rank_of(e) if ties == "average" else ranked.best_case_rank(e)
        ranks.append(worst if r is None else r)
    return min(ranks)


def _check(ranked: Mapping[str, RankedEntities], truths: Mapping[str, FaultGroundTruth | None]):
    for v in ranked:
        if truths.get(v) is None:
            raise MissingGroundTruth(v)


def top_n(
    ranked: Mapping[str, RankedEntities],
    truths: Mapping[str, FaultGroundTruth | None],
    n: int,
    ties: str = "average",
) -> int:
    _check(ranked, truths)
    return sum(1 for v, r in ranked.items() if first_faulty_rank(r, truths[v], ties) <= n)


def mfr(
    ranked: Mapping[str, RankedEntities], truths: Mapping[str, FaultGroundTruth | None]
) -> float:
    if not ranked:
        raise MissingGroundTruth("no versions to evaluate")
    _check(ranked, truths)
    return sum(first_faulty_rank(r, truths[v]) for v, r in ranked.items()) / len(ranked)


def exam(ranked: RankedEntities, truth: FaultGroundTruth | None, executable_count: int) -> float:
    if executable_count <= 0:
        raise InvalidDenominator("executable entity count must be positive")
    rank = first_faulty_rank(ranked, truth)
    if rank > executable_count:
        raise InvalidDenominator(f"rank {rank} exceeds executable entity count {executable_count}")
    return rank / executable_count


def executable_count(bundle: Bundle) -> int:
    """Entities flagged executable; every entity when no flag is set anywhere."""
    flags = [e.executable for e in bundle.entities]
    if all(f is None for f in flags):
        return len(flags)
    return sum(1 for f in flags if f)
