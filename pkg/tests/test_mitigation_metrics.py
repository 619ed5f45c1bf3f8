import pytest
from hypothesis import given
from hypothesis import strategies as st

from flimloc.confidence import Algorithm, ConfidenceConfig
from flimloc.errors import InvalidDenominator, InvalidParams, MissingGroundTruth
from flimloc.ingest import FaultGroundTruth, parse_bundle
from flimloc.mbfl import ScoredMutant, mbfl_ranking, rank_entities, score_mutants
from flimloc.metrics import exam, executable_count, first_faulty_rank, mfr, top_n
from flimloc.mitigation import final_ranking, mitigate_binary, mitigate_confidence, mitigation_confidence
from flimloc.pipeline import (
    Variant,
    compare_report,
    parse_variant,
    run_bundle,
)
from flimloc.recognition import DecisionMatrix, OracleRecognizer, recognize

from conftest import MOTIVATING_REPLAY

ORACLE_FLIMS = {"m1", "m5", "m6", "m7", "m8", "m9"}


def truth(*ids):
    return FaultGroundTruth(tuple(ids))


# mitigation


def test_binary_motivating(motivating):
    scores = score_mutants(motivating)
    decisions = recognize(motivating, OracleRecognizer()).majority()
    refined = {s.mutant_id: s.sus for s in mitigate_binary(scores, decisions)}
    for m in ORACLE_FLIMS:
        assert refined[m] == 0
    assert refined["m2"] == pytest.approx(0.71, abs=0.005)
    assert refined["m3"] == pytest.approx(0.41, abs=0.005)
    assert refined["m4"] == pytest.approx(0.5, abs=0.005)


def test_binary_identity_and_zero(motivating):
    scores = score_mutants(motivating)
    assert mitigate_binary(scores, {s.mutant_id: False for s in scores}) == scores
    assert all(s.sus == 0 for s in mitigate_binary(scores, {s.mutant_id: True for s in scores}))


def test_confidence_examples():
    scores = [ScoredMutant("a", "e", 0.8), ScoredMutant("b", "e", 0.5)]
    assert mitigate_confidence(scores, {"a": 0.0, "b": 0.0}) == scores
    out = mitigate_confidence(scores, {"a": 0.25, "b": 1.0})
    assert out[0].sus == pytest.approx(0.6)
    assert out[1].sus == 0


def test_mitigation_requires_coverage():
    scores = [ScoredMutant("a", "e", 0.8)]
    with pytest.raises(ValueError):
        mitigate_binary(scores, {})
    with pytest.raises(ValueError):
        mitigate_confidence(scores, {"a": 1.5})


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 1), st.booleans()), max_size=30))
def test_mitigation_bounds(rows):
    scores = [ScoredMutant(f"m{i}", "e", s) for i, (s, _, _) in enumerate(rows)]
    phi = {f"m{i}": c for i, (_, c, _) in enumerate(rows)}
    flags = {f"m{i}": b for i, (_, _, b) in enumerate(rows)}
    for refined in (mitigate_confidence(scores, phi), mitigate_binary(scores, flags)):
        for before, after in zip(scores, refined):
            assert 0 <= after.sus <= before.sus


def test_ebw_gated_by_majority():
    dm = DecisionMatrix(("a", "b", "c"), 3, ((False,) * 3, (True,) * 3, (True, True, False)))
    phi = mitigation_confidence(dm, ConfidenceConfig(Algorithm.EBW))
    assert phi["a"] == 0.0  # unanimous NOT_FLIM does not erase the score
    assert phi["b"] == 1.0
    assert 0 < phi["c"] < 1


def test_final_ranking_motivating(motivating):
    scores = score_mutants(motivating)
    refined = mitigate_binary(scores, recognize(motivating, OracleRecognizer()).majority())
    ranked = final_ranking(motivating, refined)
    assert ranked.as_dict() == {"S2": 1, "S3": 2, "S1": 4.5, "S4": 4.5, "S5": 4.5, "S6": 4.5}
    sus = {r.entity_id: r.sus for r in ranked}
    assert sus == pytest.approx({"S1": 0, "S2": 0.71, "S3": 0.5, "S4": 0, "S5": 0, "S6": 0}, abs=0.005)


def test_final_ranking_no_mutants(bundle_copy):
    root, edit = bundle_copy
    edit("mutants.json", lambda _: [])
    edit("kills.json", lambda d: {"mutants": [], "tests": d["tests"], "cells": []})
    ranked = final_ranking(parse_bundle(root), [])
    assert {r.rank for r in ranked} == {3.5}
    assert {r.sus for r in ranked} == {0.0}


def test_final_ranking_single_entity():
    assert rank_entities({"only": 0.3}).as_dict() == {"only": 1}


# metrics


def test_top_n_motivating(motivating):
    mbfl = {"v": mbfl_ranking(motivating)}
    scores = score_mutants(motivating)
    flim = {"v": final_ranking(motivating, mitigate_binary(scores, recognize(motivating, OracleRecognizer()).majority()))}
    gt = {"v": motivating.ground_truth}
    assert top_n(flim, gt, 1) == 1
    assert top_n(mbfl, gt, 1) == 0
    assert top_n(mbfl, gt, 6) == 1
    assert mfr(flim, gt) == 1.0
    assert exam(flim["v"], motivating.ground_truth, executable_count(motivating)) == pytest.approx(1 / 6, abs=1e-4)


def test_top_n_ties_policy():
    ranked = {"v": rank_entities({"a": 1, "b": 1, "c": 0})}
    gt = {"v": truth("b")}
    assert top_n(ranked, gt, 1) == 0  # rank 1.5
    assert top_n(ranked, gt, 1, ties="best") == 1


def test_mfr_examples():
    ranked = rank_entities({"a": 3, "b": 2, "c": 1})
    assert mfr({"v": ranked}, {"v": truth("a", "b")}) == 1
    r5 = rank_entities({f"e{i}": 10 - i for i in range(6)})
    assert mfr({"v1": ranked, "v2": r5}, {"v1": truth("a"), "v2": truth("e4")}) == 3


def test_metrics_missing_truth():
    ranked = {"v": rank_entities({"a": 1})}
    with pytest.raises(MissingGroundTruth):
        top_n(ranked, {"v": None}, 1)
    with pytest.raises(MissingGroundTruth):
        mfr(ranked, {})
    with pytest.raises(MissingGroundTruth):
        mfr({}, {})


def test_exam_examples():
    ranked = rank_entities({"a": 3, "b": 2, "c": 1})
    assert exam(ranked, truth("c"), 3) == 1.0
    assert exam(ranked, truth("a"), 10) == pytest.approx(0.1)
    with pytest.raises(InvalidDenominator):
        exam(ranked, truth("a"), 0)
    with pytest.raises(InvalidDenominator):
        exam(ranked, truth("c"), 2)


def test_missing_faulty_entity_ranked_past_end():
    ranked = rank_entities({"a": 3, "b": 2})
    assert first_faulty_rank(ranked, truth("zz")) == 3


def test_executable_count(bundle_copy):
    root, edit = bundle_copy
    assert executable_count(parse_bundle(root)) == 6
    edit("entities.json", lambda es: [dict(e, executable=(i % 2 == 0)) for i, e in enumerate(es)])
    assert executable_count(parse_bundle(root)) == 3
    edit("entities.json", lambda es: [{k: v for k, v in e.items() if k != "executable"} for e in es])
    assert executable_count(parse_bundle(root)) == 6


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.data())
def test_metric_coherence(scores, data):
    ids = [f"e{i:02d}" for i in range(len(scores))]
    ranked = rank_entities(dict(zip(ids, scores)))
    faulty = data.draw(st.lists(st.sampled_from(ids), min_size=1, max_size=3, unique=True))
    r, t = {"v": ranked}, {"v": truth(*faulty)}
    assert top_n(r, t, 1) <= top_n(r, t, 3) <= top_n(r, t, 5)
    e = exam(ranked, truth(*faulty), len(ids))
    assert 0 < e <= 1


# pipeline


def test_parse_variant():
    assert parse_variant("mbfl").method == "mbfl"
    v = parse_variant("flim-oracle:pca", runs=3)
    assert (v.recognizer, v.mitigation, v.confidence.algorithm, v.runs) == ("oracle", "confidence", Algorithm.PCA, 3)
    for bad in ("mbfl:pca", "flim-oracle:svm", "xyz"):
        with pytest.raises(InvalidParams):
            parse_variant(bad)
    with pytest.raises(InvalidParams):
        Variant("r", method="flim", recognizer="remote")


def test_compare_report_motivating(motivating):
    reports, doc, table = compare_report([motivating], [parse_variant("mbfl"), parse_variant("flim-oracle")])
    assert [r.top1 for r in reports] == [0, 1]
    assert [v["top1"] for v in doc["variants"]] == [0, 1]
    assert doc["variants"][1]["exam"] == [{"version": "motivating-example-1", "exam": 0.1667}]
    assert table.count("\n") == 4


def test_compare_report_identical_variants(motivating):
    _, doc, table = compare_report([motivating], [parse_variant("mbfl"), parse_variant("mbfl")])
    a, b = doc["variants"]
    assert a == b
    lines = table.splitlines()
    assert lines[2] == lines[3]


def test_compare_report_empty(motivating):
    with pytest.raises(InvalidParams):
        compare_report([motivating], [])


@pytest.mark.parametrize("algorithm", ["ebw", "cbw", "pca"])
def test_confidence_variants_on_replay(motivating, algorithm):
    v = parse_variant(f"flim-replay:{algorithm}", runs=3, replay=str(MOTIVATING_REPLAY))
    res = run_bundle(motivating, v)
    assert all(0 <= x <= 1 for x in res.confidence.values())
    assert res.ranked.rank_of("S2") <= mbfl_ranking(motivating).rank_of("S2")


def test_pca_falls_back_for_single_mutant(bundle_copy, caplog):
    root, edit = bundle_copy
    keep = "m2"

    def one(doc):
        i = doc["mutants"].index(keep)
        return {"mutants": [keep], "tests": doc["tests"], "cells": [doc["cells"][i]]}

    edit("mutants.json", lambda ms: [m for m in ms if m["mutant_id"] == keep])
    edit("kills.json", one)
    res = run_bundle(parse_bundle(root), parse_variant("flim-oracle:pca"))
    assert res.confidence == {"m2": 0.0}
    assert "falls back to CBW" in caplog.text
