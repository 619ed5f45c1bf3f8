"""Seeded synthetic bundles with known interference mutants.

Construction rules, which the property tests rely on:

* every mutant on a faulty entity is killed by at least one failing test;
* every mutant tagged with an interference cause sits on a non-faulty entity
  and is killed by at least one failing test (so it is a FLIM);
* every other mutant on a non-faulty entity is killed by no failing test.

The cause tag is metadata only; it nudges how the kill shows up (a
revealability-style interference makes the failing test pass, for instance)
but carries no semantics the pipeline can see.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Mapping

from .errors import InvalidParams
from .ingest import (
    Bundle,
    CoverageMatrix,
    Entity,
    FaultGroundTruth,
    KillCell,
    Mutant,
    Outcome,
    TestRecord,
)


class Cause(str, enum.Enum):
    REACH = "reach"
    INFECTION = "infection"
    PROPAGATION = "propagation"
    REVEALABILITY = "revealability"
    NONE = "none"


DEFAULT_CAUSE_MIX = {
    Cause.REACH: 1.0,
    Cause.INFECTION: 1.0,
    Cause.PROPAGATION: 1.0,
    Cause.REVEALABILITY: 1.0,
}

# probability that a killed failing test flips to passing, per cause
_FLIP_PROB = {
    Cause.REACH: 0.5,
    Cause.INFECTION: 0.6,
    Cause.PROPAGATION: 0.4,
    Cause.REVEALABILITY: 0.9,
}


@dataclass(frozen=True)
class SyntheticParams:
    entities: int = 50
    mutants: int = 150
    faults: int = 1
    flim_fraction: float = 0.3
    cause_mix: Mapping[Cause, float] = field(default_factory=lambda: dict(DEFAULT_CAUSE_MIX))
    failing_tests: int | None = None
    passing_tests: int | None = None

    def validate(self) -> None:
        if self.entities < 1 or self.mutants < 1 or self.faults < 1:
            raise InvalidParams("entity, mutant and fault counts must be positive")
        if self.faults > self.entities:
            raise InvalidParams("more faults than entities")
        if self.mutants < self.faults:
            raise InvalidParams("need at least one mutant per faulty entity")
        if not 0.0 <= self.flim_fraction <= 1.0:
            raise InvalidParams("flim_fraction must lie in [0, 1]")
        mix = {Cause(k): v for k, v in self.cause_mix.items()}
        if Cause.NONE in mix or any(v < 0 for v in mix.values()) or sum(mix.values()) <= 0:
            raise InvalidParams("cause_mix needs non-negative weights over real causes")
        for n in (self.failing_tests, self.passing_tests):
            if n is not None and n < 0:
                raise InvalidParams("test counts must be non-negative")
        if self.failing_tests == 0:
            raise InvalidParams("at least one failing test is required")


@dataclass(frozen=True)
class SyntheticInstance:
    bundle: Bundle
    causes: Mapping[str, Cause]
    seed: int
    params: SyntheticParams

    @property
    def flims(self) -> frozenset[str]:
        return frozenset(m for m, c in self.causes.items() if c is not Cause.NONE)


def _subset(rng: random.Random, pool: list[str], p: float) -> set[str]:
    return {x for x in pool if rng.random() < p}


def _nonempty_subset(rng: random.Random, pool: list[str], p: float = 0.5) -> set[str]:
    picked = _subset(rng, pool, p)
    return picked or {rng.choice(pool)}


def generate_synthetic(seed: int, params: SyntheticParams = SyntheticParams()) -> SyntheticInstance:
    params.validate()
    rng = random.Random(seed)
    n_fail = params.failing_tests if params.failing_tests is not None else rng.randint(1, 4)
    n_pass = params.passing_tests if params.passing_tests is not None else rng.randint(3, 15)

    failing = [f"tf{i:02d}" for i in range(n_fail)]
    passing = [f"tp{i:02d}" for i in range(n_pass)]
    tests = []
    for tid in passing:
        tests.append(TestRecord(tid, Outcome.PASS))
    for i, tid in enumerate(failing):
        tests.append(
            TestRecord(
                tid,
                Outcome.FAIL,
                f"AssertionError: expected:<{i}> but was:<{i + 1}>",
                ("org.junit.Assert.fail(Assert.java:89)", f"SynthTest.{tid}(SynthTest.java:{10 + i})"),
            )
        )
    tests.sort(key=lambda t: t.test_id)
    orig = {t.test_id: t for t in tests}
    test_ids = [t.test_id for t in tests]

    entity_ids = [f"e{i:04d}" for i in range(params.entities)]
    entities = tuple(
        Entity(eid, "src/Synth.java", 10 + i, 10 + i, True) for i, eid in enumerate(entity_ids)
    )
    faulty = sorted(rng.sample(entity_ids, params.faults))
    faulty_set = set(faulty)

    covered: dict[str, set[str]] = {}
    for eid in entity_ids:
        fails = set(failing) if eid in faulty_set else _nonempty_subset(rng, failing, 0.6)
        covered[eid] = fails | _subset(rng, passing, 0.5)
    coverage = CoverageMatrix(
        tuple(entity_ids),
        tuple(test_ids),
        tuple(tuple(int(t in covered[e]) for t in test_ids) for e in entity_ids),
    )

    locations = list(faulty) + [rng.choice(entity_ids) for _ in range(params.mutants - len(faulty))]
    mutant_ids = [f"m{i:05d}" for i in range(params.mutants)]
    nonfaulty = [m for m, loc in zip(mutant_ids, locations) if loc not in faulty_set]
    n_flims = round(params.flim_fraction * len(nonfaulty))
    flim_set = set(rng.sample(nonfaulty, n_flims))
    causes_pool = [Cause(k) for k in params.cause_mix]
    weights = [params.cause_mix[k] for k in params.cause_mix]

    mutants, causes = [], {}
    for mid, loc in zip(mutant_ids, locations):
        cov_fail = sorted(covered[loc] & set(failing))
        cov_pass = sorted(covered[loc] & set(passing))
        if loc in faulty_set:
            cause, fail_kills, flip = Cause.NONE, _nonempty_subset(rng, cov_fail), 0.5
        elif mid in flim_set:
            cause = rng.choices(causes_pool, weights)[0]
            fail_kills, flip = _nonempty_subset(rng, cov_fail), _FLIP_PROB[cause]
        else:
            cause, fail_kills, flip = Cause.NONE, set(), 0.0
        pass_kills = _subset(rng, cov_pass, 0.3)
        causes[mid] = cause

        kills = {}
        for tid in test_ids:
            t = orig[tid]
            if tid in fail_kills:
                if rng.random() < flip:
                    kills[tid] = KillCell(True, Outcome.PASS)
                else:
                    kills[tid] = KillCell(
                        True,
                        Outcome.FAIL,
                        t.error_message.replace("but was", f"({mid}) but was"),
                        t.stack_trace[:1] + (f"Synth.run(Synth.java:{loc[1:]})",) + t.stack_trace[1:],
                    )
            elif tid in pass_kills:
                kills[tid] = KillCell(
                    True, Outcome.FAIL, f"AssertionError: {mid} changed output",
                    (f"SynthTest.{tid}(SynthTest.java:5)",),
                )
            else:
                kills[tid] = KillCell(False, t.outcome, t.error_message, t.stack_trace)
        mutants.append(
            Mutant(mid, loc, "AOR", f"x = a + b; // {loc}", f"x = a - b; // {loc}", kills)
        )

    bundle = Bundle(
        tests=tuple(tests),
        entities=entities,
        coverage=coverage,
        mutants=tuple(mutants),
        kill_mutant_order=tuple(mutant_ids),
        kill_test_order=tuple(test_ids),
        ground_truth=FaultGroundTruth(tuple(faulty)),
        subject="synthetic",
        version=str(seed),
        name=f"synthetic-{seed}",
    )
    return SyntheticInstance(bundle, causes, seed, params)
