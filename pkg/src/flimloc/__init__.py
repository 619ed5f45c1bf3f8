"""Mutation-based fault localization with interference-mutant (FLIM)
recognition and mitigation."""

from .confidence import Algorithm, ConfidenceConfig, cbw, confidence, ebw, pca
from .ingest import Bundle, parse_bundle, partition_tests, suspicious_entities, write_bundle
from .mbfl import (
    Formula,
    FormulaConfig,
    KillStats,
    RankedEntities,
    ScoredMutant,
    aggregate_entity,
    kill_stats,
    mbfl_ranking,
    rank_entities,
    sbfl_suspiciousness,
    score_mutants,
    suspiciousness,
)
from .metrics import exam, mfr, top_n
from .mitigation import final_ranking, mitigate_binary, mitigate_confidence
from .pipeline import Variant, compare_report, parse_variant, run_bundle, run_variant
from .synthetic import Cause, SyntheticParams, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "Bundle",
    "Cause",
    "ConfidenceConfig",
    "Formula",
    "FormulaConfig",
    "KillStats",
    "RankedEntities",
    "ScoredMutant",
    "SyntheticParams",
    "Variant",
    "aggregate_entity",
    "cbw",
    "compare_report",
    "confidence",
    "ebw",
    "exam",
    "final_ranking",
    "generate_synthetic",
    "kill_stats",
    "mbfl_ranking",
    "mfr",
    "mitigate_binary",
    "mitigate_confidence",
    "parse_bundle",
    "parse_variant",
    "partition_tests",
    "pca",
    "rank_entities",
    "run_bundle",
    "run_variant",
    "sbfl_suspiciousness",
    "score_mutants",
    "suspicious_entities",
    "suspiciousness",
    "top_n",
    "write_bundle",
]
