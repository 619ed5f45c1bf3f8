"""Acceptance gate: one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in an
"acceptance criteria" section at the end of the pytest run.
"""

import math
import random
import time

import numpy as np
import pytest

from flimloc.cli import main
from flimloc.confidence import cbw, ebw
from flimloc.ingest import FaultGroundTruth, parse_bundle, write_bundle
from flimloc.mbfl import Formula, FormulaConfig, KillStats, mbfl_ranking, rank_entities, score_mutants, suspiciousness
from flimloc.metrics import exam, executable_count, first_faulty_rank, mfr, top_n
from flimloc.pipeline import parse_variant, run_bundle
from flimloc.synthetic import SyntheticParams, generate_synthetic

from conftest import ACCEPTANCE_LINES, MOTIVATING, MOTIVATING_REPLAY
from oracles import decision_matrix, pca_deviation

TOL = 0.005


@pytest.fixture
def gate():
    def record(n, title, ok, detail):
        line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES[n] = line
        assert ok, line

    return record


def _close(got, expected, tol):
    return set(got) == set(expected) and all(abs(got[k] - expected[k]) <= tol for k in expected)


def test_criterion_1_motivating_golden(gate):
    start = time.perf_counter()
    bundle = parse_bundle(MOTIVATING)
    scores = {s.mutant_id: s.sus for s in score_mutants(bundle)}
    ranked = mbfl_ranking(bundle)
    elapsed = time.perf_counter() - start

    sus_m = {"m1": 1, "m2": 0.71, "m3": 0.41, "m4": 0.5, "m5": 0.71, "m6": 1, "m7": 0.71, "m8": 0.82, "m9": 0.71}
    sus_s = {"S1": 1, "S2": 0.71, "S3": 0.5, "S4": 1, "S5": 0.82, "S6": 0.71}
    rank_s = {"S1": 1.5, "S2": 4.5, "S3": 6, "S4": 1.5, "S5": 3, "S6": 4.5}
    ok = (
        _close(scores, sus_m, TOL)
        and _close({r.entity_id: r.sus for r in ranked}, sus_s, TOL)
        and ranked.as_dict() == rank_s
        and elapsed < 1.0
    )
    gate(1, "motivating example, plain MBFL", ok, f"Sus(M), Sus(S), Rank(S) reproduced in {elapsed * 1000:.1f} ms")


def test_criterion_2_motivating_mitigation(gate):
    bundle = parse_bundle(MOTIVATING)
    res = run_bundle(bundle, parse_variant("flim-oracle"))
    sus_s = {"S1": 0, "S2": 0.71, "S3": 0.5, "S4": 0, "S5": 0, "S6": 0}
    rank_s = {"S2": 1, "S3": 2, "S1": 4.5, "S4": 4.5, "S5": 4.5, "S6": 4.5}
    ok = _close({r.entity_id: r.sus for r in res.ranked}, sus_s, TOL) and res.ranked.as_dict() == rank_s
    gate(2, "motivating example, oracle binary mitigation", ok, f"ranks {res.ranked.as_dict()}")


def _synthetic_params(seed):
    r = random.Random(1000 + seed)
    return SyntheticParams(
        entities=r.randint(20, 200),
        mutants=r.randint(50, 500),
        faults=r.randint(1, 3),
        flim_fraction=r.uniform(0.05, 0.8),
    )


def test_criterion_3_synthetic_scale(gate):
    start = time.perf_counter()
    n = 120
    plain_top1 = flim_top1 = 0
    worsened = []
    for seed in range(n):
        inst = generate_synthetic(seed, _synthetic_params(seed))
        b = inst.bundle
        assert len(b.entities) <= 200 and len(b.mutants) <= 500
        before = run_bundle(b, parse_variant("mbfl")).ranked
        after = run_bundle(b, parse_variant("flim-oracle")).ranked
        plain_top1 += first_faulty_rank(before, b.ground_truth) <= 1
        flim_top1 += first_faulty_rank(after, b.ground_truth) <= 1
        for e in b.ground_truth.faulty_entities:
            if after.rank_of(e) > before.rank_of(e):
                worsened.append((seed, e))
    elapsed = time.perf_counter() - start
    ok = flim_top1 >= plain_top1 and not worsened and elapsed < 60
    gate(
        3,
        "synthetic substitute for full-scale results",
        ok,
        f"{n} instances, Top-1 plain {plain_top1} vs oracle-mitigated {flim_top1}, "
        f"{len(worsened)} worsened faulty ranks, {elapsed:.1f} s",
    )


def test_criterion_4_confidence_suite(gate):
    h = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    checks = {
        "ebw unanimous": ebw(decision_matrix([[1, 1, 1, 1]]))["m000"] == 1.0
        and ebw(decision_matrix([[0, 0, 0, 0]]))["m000"] == 1.0,
        "ebw 50/50": abs(ebw(decision_matrix([[1, 1, 0, 0]]))["m000"]) <= 1e-12,
        "ebw 3-of-4": abs(ebw(decision_matrix([[1, 1, 1, 0]]))["m000"] - 0.1887) <= 1e-4
        and abs(ebw(decision_matrix([[1, 1, 1, 0]]))["m000"] - (1 - h / math.log(2))) <= 1e-12,
    }
    rng = np.random.default_rng(4)
    cbw_exact = True
    for _ in range(200):
        r = rng.random((int(rng.integers(1, 30)), int(rng.integers(1, 12)))) < 0.5
        phi = cbw(decision_matrix(r))
        cbw_exact &= all(phi[f"m{i:03d}"] == sum(bool(c) for c in row) / r.shape[1] for i, row in enumerate(r))
    checks["cbw row means"] = cbw_exact

    draws, worst, degenerate = 1500, 0.0, 0
    for _ in range(draws):
        r = (rng.random((int(rng.integers(2, 9)), int(rng.integers(1, 5)))) < rng.uniform(0.1, 0.9)).astype(float)
        dev = pca_deviation(r)
        if dev is None:
            degenerate += 1
        else:
            worst = max(worst, dev)
    checks["pca oracle"] = worst <= 1e-6
    failed = [k for k, v in checks.items() if not v]
    gate(
        4,
        "confidence algorithms",
        not failed,
        f"PCA max deviation {worst:.1e} over {draws - degenerate} draws "
        f"(+{degenerate} repeated-eigenvalue draws checked by eigenspace)"
        + (f"; failed: {failed}" if failed else ""),
    )


def _run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, _ = capsys.readouterr()
    return code, out


def test_criterion_5_null_identity(gate, capsys, tmp_path):
    fixtures = [MOTIVATING]
    for seed in (1, 2, 3):
        fixtures.append(write_bundle(generate_synthetic(seed, _synthetic_params(seed)).bundle, tmp_path / f"syn{seed}"))
    mismatched = []
    for i, fx in enumerate(fixtures):
        a, b = tmp_path / f"mbfl{i}", tmp_path / f"null{i}"
        ca, out_a = _run_cli(capsys, "mbfl", "--bundle", fx, "--out", a)
        cb, out_b = _run_cli(capsys, "localize", "--bundle", fx, "--recognizer", "null", "--out", b)
        if ca or cb or out_a != out_b or (a / "ranking.json").read_bytes() != (b / "ranking.json").read_bytes():
            mismatched.append(fx.name)
    gate(5, "null recognizer identity", not mismatched,
         f"{len(fixtures)} fixtures, ranking.json and stdout byte-identical"
         + (f"; mismatched: {mismatched}" if mismatched else ""))


def test_criterion_6_metric_formulas(gate):
    motivating = parse_bundle(MOTIVATING)
    mitigated = run_bundle(motivating, parse_variant("flim-oracle")).ranked
    gt = lambda *ids: FaultGroundTruth(tuple(ids))  # noqa: E731
    # (ranking, ground truth, executable count, hand-computed first rank, hand-computed EXAM)
    cases = [
        (mitigated, motivating.ground_truth, executable_count(motivating), 1.0, 1 / 6),
        (mbfl_ranking(motivating), motivating.ground_truth, 6, 4.5, 0.75),
        (rank_entities({"a": 0.9, "b": 0.8, "c": 0.8, "d": 0.1}), gt("c"), 10, 2.5, 0.25),
        (rank_entities({"a": 1, "b": 0.5, "c": 0.5, "d": 0.5, "e": 0}), gt("d", "e"), 5, 3.0, 0.6),
        (rank_entities({"a": 0.4, "b": 0.2}), gt("z"), 4, 3.0, 0.75),
    ]
    bad = []
    for i, (ranked, truth, count, rank, expected_exam) in enumerate(cases):
        if abs(exam(ranked, truth, count) - expected_exam) > 1e-4:
            bad.append(f"exam#{i}")
        if abs(mfr({"v": ranked}, {"v": truth}) - rank) > 1e-4:
            bad.append(f"mfr#{i}")
    ranked_map = {f"v{i}": c[0] for i, c in enumerate(cases)}
    truth_map = {f"v{i}": c[1] for i, c in enumerate(cases)}
    if abs(mfr(ranked_map, truth_map) - 14 / 5) > 1e-4:
        bad.append("mfr over all")
    if top_n(ranked_map, truth_map, 1) != 1 or top_n(ranked_map, truth_map, 3) != 4:
        bad.append("top-n")
    gate(6, "MFR and EXAM", not bad, f"5 constructed instances, motivating example EXAM {exam(*cases[0][:3]):.4f}"
         + (f"; failed: {bad}" if bad else ""))


def test_criterion_7_hermetic_replay(gate, capsys, tmp_path):
    blobs = []
    for i in range(3):
        out = tmp_path / f"run{i}"
        code, stdout = _run_cli(
            capsys, "localize", "--bundle", MOTIVATING, "--recognizer", "replay", "--replay", MOTIVATING_REPLAY,
            "--runs", 3, "--mitigation", "confidence", "--confidence", "pca", "--jobs", 4, "--out", out,
        )
        assert code == 0
        blobs.append([stdout] + [(out / n).read_bytes() for n in ("decisions.json", "ranking.json", "report.json")])
    ok = blobs[0] == blobs[1] == blobs[2]
    gate(7, "hermetic replay recognition", ok, "3 runs, decisions/ranking/report byte-identical")


def test_criterion_8_formula_guards(gate):
    rng = random.Random(8)
    configs = [FormulaConfig(f) for f in Formula] + [FormulaConfig(Formula.DSTAR, 3.0)]
    bad = 0
    for i in range(10_000):
        hi = 10 ** rng.randint(0, 6)
        s = KillStats(*(rng.randint(0, hi) if rng.random() > 0.2 else 0 for _ in range(4)))
        if i % 10 == 0:
            s = KillStats(s.a_np, s.a_kp, s.a_nf, 0)
        for c in configs:
            v = suspiciousness(s, c)
            if not math.isfinite(v) or v < 0 or (s.a_kf == 0 and v != 0):
                bad += 1
    gate(8, "formula guards", bad == 0, f"10000 random KillStats x {len(configs)} formulas, {bad} violations")
