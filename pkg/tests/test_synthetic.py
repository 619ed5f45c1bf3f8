import pytest

from flimloc.errors import InvalidParams
from flimloc.ingest import bundle_to_json, killed_by_failing, partition_tests
from flimloc.pipeline import parse_variant, run_bundle
from flimloc.synthetic import Cause, SyntheticParams, generate_synthetic


def test_deterministic():
    a = generate_synthetic(42)
    b = generate_synthetic(42)
    assert bundle_to_json(a.bundle) == bundle_to_json(b.bundle)
    assert a.causes == b.causes
    assert bundle_to_json(generate_synthetic(43).bundle) != bundle_to_json(a.bundle)


@pytest.mark.parametrize("seed", range(25))
def test_construction_rules(seed):
    inst = generate_synthetic(seed, SyntheticParams(entities=30, mutants=90, faults=1 + seed % 3))
    b = inst.bundle
    _, failing = partition_tests(b)
    for m in b.mutants:
        killed = killed_by_failing(m, failing)
        if m.entity_id in b.ground_truth:
            assert killed
            assert inst.causes[m.mutant_id] is Cause.NONE
        elif inst.causes[m.mutant_id] is not Cause.NONE:
            assert killed
        else:
            assert not killed


def test_flim_fraction_counts():
    p = SyntheticParams(entities=40, mutants=200, flim_fraction=0.25)
    inst = generate_synthetic(3, p)
    nonfaulty = [m for m in inst.bundle.mutants if m.entity_id not in inst.bundle.ground_truth]
    assert len(inst.flims) == round(0.25 * len(nonfaulty))


@pytest.mark.parametrize("seed", range(10))
def test_zero_flims_oracle_noop(seed):
    inst = generate_synthetic(seed, SyntheticParams(entities=30, mutants=80, flim_fraction=0.0))
    res = run_bundle(inst.bundle, parse_variant("flim-oracle"))
    assert res.refined == res.scores


@pytest.mark.parametrize("seed", range(20))
def test_all_flims_fault_is_unique_max(seed):
    inst = generate_synthetic(seed, SyntheticParams(entities=40, mutants=120, faults=1, flim_fraction=1.0))
    res = run_bundle(inst.bundle, parse_variant("flim-oracle"))
    (fault,) = inst.bundle.ground_truth.faulty_entities
    top = res.ranked[0]
    assert top.entity_id == fault and top.rank == 1
    assert all(r.sus < top.sus for r in res.ranked[1:])


@pytest.mark.parametrize(
    "params",
    [
        SyntheticParams(entities=0),
        SyntheticParams(mutants=0),
        SyntheticParams(entities=3, faults=4),
        SyntheticParams(flim_fraction=1.5),
        SyntheticParams(cause_mix={Cause.REACH: -1.0}),
        SyntheticParams(cause_mix={Cause.NONE: 1.0}),
        SyntheticParams(failing_tests=0),
        SyntheticParams(entities=5, mutants=2, faults=3),
    ],
)
def test_invalid_params(params):
    with pytest.raises(InvalidParams):
        generate_synthetic(0, params)


def test_cause_mix_respected():
    inst = generate_synthetic(5, SyntheticParams(mutants=300, cause_mix={Cause.REVEALABILITY: 1.0}))
    assert {inst.causes[m] for m in inst.flims} == {Cause.REVEALABILITY}
