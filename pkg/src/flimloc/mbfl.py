"""Kill statistics, suspiciousness formulas, aggregation and tie-aware ranking."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .ingest import Bundle, CoverageMatrix, Mutant, partition_tests, suspicious_entities

# D* with nothing in its denominator: scale instead of dividing by zero so
# the score stays finite and still orders by a_kf.
DSTAR_SENTINEL = 1e6

# Scores equal after rounding to this many decimals share a rank.
TIE_DECIMALS = 10


class Formula(str, enum.Enum):
    OCHIAI = "ochiai"
    TARANTULA = "tarantula"
    DSTAR = "dstar"
    JACCARD = "jaccard"


@dataclass(frozen=True)
class FormulaConfig:
    formula: Formula = Formula.OCHIAI
    dstar_exponent: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "formula", Formula(self.formula))
        if not self.dstar_exponent >= 1:
            raise ValueError("dstar_exponent must be >= 1")


@dataclass(frozen=True)
class KillStats:
    a_np: int
    a_kp: int
    a_nf: int
    a_kf: int

    @property
    def total(self) -> int:
        return self.a_np + self.a_kp + self.a_nf + self.a_kf


@dataclass(frozen=True)
class ScoredMutant:
    mutant_id: str
    entity_id: str
    sus: float


@dataclass(frozen=True)
class RankedEntity:
    entity_id: str
    sus: float
    rank: float


class RankedEntities(tuple):
    """Entities in descending suspiciousness with average-tie ranks."""

    def rank_of(self, entity_id: str) -> float | None:
        for r in self:
            if r.entity_id == entity_id:
                return r.rank
        return None

    def as_dict(self) -> dict[str, float]:
        return {r.entity_id: r.rank for r in self}

    def best_case_rank(self, entity_id: str) -> float | None:
        """Position of the first entity in this entity's tie group."""
        mine = None
        for r in self:
            if r.entity_id == entity_id:
                mine = round(r.sus, TIE_DECIMALS)
        if mine is None:
            return None
        return 1.0 + sum(1 for r in self if round(r.sus, TIE_DECIMALS) > mine)


def kill_stats(mutant: Mutant, passing: Iterable[str], failing: Iterable[str]) -> KillStats:
    kills = mutant.kills
    a_kp = a_np = a_kf = a_nf = 0
    for t in passing:
        if kills[t].killed:
            a_kp += 1
        else:
            a_np += 1
    for t in failing:
        if kills[t].killed:
            a_kf += 1
        else:
            a_nf += 1
    return KillStats(a_np=a_np, a_kp=a_kp, a_nf=a_nf, a_kf=a_kf)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def ochiai(s: KillStats) -> float:
    den = math.sqrt((s.a_kf + s.a_nf) * (s.a_kf + s.a_kp))
    return _ratio(s.a_kf, den)


def tarantula(s: KillStats) -> float:
    fail_ratio = _ratio(s.a_kf, s.a_kf + s.a_nf)
    pass_ratio = _ratio(s.a_kp, s.a_kp + s.a_np)
    return _ratio(fail_ratio, fail_ratio + pass_ratio)


def dstar(s: KillStats, exponent: float = 2.0) -> float:
    if s.a_kf == 0:
        return 0.0
    num = float(s.a_kf) ** exponent
    den = s.a_kp + s.a_nf
    if den == 0:
        return num * DSTAR_SENTINEL
    return num / den


def jaccard(s: KillStats) -> float:
    return _ratio(s.a_kf, s.a_kf + s.a_nf + s.a_kp)


def suspiciousness(stats: KillStats, config: FormulaConfig = FormulaConfig()) -> float:
    f = config.formula
    if f is Formula.OCHIAI:
        return ochiai(stats)
    if f is Formula.TARANTULA:
        return tarantula(stats)
    if f is Formula.DSTAR:
        return dstar(stats, config.dstar_exponent)
    if f is Formula.JACCARD:
        return jaccard(stats)
    raise ValueError(f"unknown formula {f!r}")


def coverage_stats(
    entity_id: str, coverage: CoverageMatrix, passing: Iterable[str], failing: Iterable[str]
) -> KillStats:
    """Spectrum counters for an entity, laid out like kill counters
    (covered plays the role of killed)."""
    covered = coverage.covering_tests(entity_id)
    passing, failing = set(passing), set(failing)
    ep = len(covered & passing)
    ef = len(covered & failing)
    return KillStats(a_np=len(passing) - ep, a_kp=ep, a_nf=len(failing) - ef, a_kf=ef)


def sbfl_suspiciousness(
    entity_id: str,
    coverage: CoverageMatrix,
    passing: Iterable[str],
    failing: Iterable[str],
    config: FormulaConfig = FormulaConfig(),
) -> float:
    return suspiciousness(coverage_stats(entity_id, coverage, passing, failing), config)


def score_mutants(bundle: Bundle, config: FormulaConfig = FormulaConfig()) -> list[ScoredMutant]:
    """Original suspiciousness of every mutant, ordered by mutant_id."""
    passing, failing = partition_tests(bundle)
    passing, failing = sorted(passing), sorted(failing)
    scored = [
        ScoredMutant(m.mutant_id, m.entity_id, suspiciousness(kill_stats(m, passing, failing), config))
        for m in bundle.mutants
    ]
    return sorted(scored, key=lambda s: s.mutant_id)


def aggregate_entity(scores: Iterable[float | ScoredMutant], how: str = "max") -> float:
    vals = [s.sus if isinstance(s, ScoredMutant) else float(s) for s in scores]
    if not vals:
        return 0.0
    if how == "max":
        return max(vals)
    if how == "mean":
        return sum(vals) / len(vals)
    raise ValueError(f"unknown aggregation {how!r}")


def entity_scores(
    bundle: Bundle, scored: Iterable[ScoredMutant], how: str = "max"
) -> dict[str, float]:
    """Aggregate mutant scores onto every suspicious entity."""
    by_entity: dict[str, list[ScoredMutant]] = {e: [] for e in suspicious_entities(bundle)}
    for s in scored:
        if s.entity_id in by_entity:
            by_entity[s.entity_id].append(s)
    return {e: aggregate_entity(ms, how) for e, ms in by_entity.items()}


def rank_entities(scores: Mapping[str, float]) -> RankedEntities:
    order = sorted(scores.items(), key=lambda kv: (-round(kv[1], TIE_DECIMALS), kv[0]))
    out = []
    i = 0
    while i < len(order):
        key = round(order[i][1], TIE_DECIMALS)
        j = i
        while j < len(order) and round(order[j][1], TIE_DECIMALS) == key:
            j += 1
        # positions i+1 .. j share the mean rank
        avg = (i + 1 + j) / 2
        out.extend(RankedEntity(e, s, avg) for e, s in order[i:j])
        i = j
    return RankedEntities(out)


def mbfl_ranking(
    bundle: Bundle, config: FormulaConfig = FormulaConfig(), how: str = "max"
) -> RankedEntities:
    return rank_entities(entity_scores(bundle, score_mutants(bundle, config), how))


def sbfl_ranking(bundle: Bundle, config: FormulaConfig = FormulaConfig()) -> RankedEntities:
    passing, failing = partition_tests(bundle)
    return rank_entities(
        {
            e: sbfl_suspiciousness(e, bundle.coverage, passing, failing, config)
            for e in suspicious_entities(bundle)
        }
    )
