from itertools import product as iproduct

import numpy as np
import pytest

from trotterchain import sim
from trotterchain.charges import ChargeSpec, DeltaPoly, PauliPolynomial, assemble, density
from trotterchain.circuit import InitialStateSpec
from trotterchain.measure import (
    CoverageError,
    MeasurementPlan,
    PauliWord,
    ShotRecords,
    build_cover,
    contains,
    estimate,
    exact_estimator_variance,
)
from trotterchain.pauli import PauliString

DELTA = float(np.tan(0.3))


def test_contains_footnote_examples():
    w = PauliWord("XXZY")
    assert contains(w, PauliString.from_letters("XIZI"))  # X1 Z3
    assert contains(w, PauliString.from_letters("XXII"))  # X1 X2
    assert not contains(w, PauliString.from_letters("ZIII"))
    with pytest.raises(ValueError):
        contains(w, PauliString.from_letters("X"))


def test_word_validation():
    with pytest.raises(ValueError):
        PauliWord("XIZ")


def test_cover_single_term():
    q = PauliPolynomial(2)
    q.add_term(PauliString.from_letters("ZZ"), DeltaPoly((1,)))
    plan = build_cover(q)
    assert [w.letters for w in plan.words] == ["ZZ"]


def test_cover_of_window_density_is_exhaustive():
    q = density(1, "plus")  # three-site window charge
    plan = build_cover(q)
    terms = list(q.terms)
    for s in terms:
        assert any(contains(w, s) for w in plan.words)
    # lower bound from the 27 candidate words: a word covers at most one term
    # of any pairwise-incompatible family, and the greedy cover attains it
    words = [PauliWord("".join(w)) for w in iproduct("XYZ", repeat=3)]
    cover_sets = [frozenset(i for i, s in enumerate(terms) if contains(w, s)) for w in words]
    incompatible = []
    for i, s in enumerate(terms):
        if all(
            not any(i in cs and j in cs for cs in cover_sets) for j in incompatible
        ):
            incompatible.append(i)
    assert len(plan.words) == len(incompatible)


def test_cover_union_equals_term_set():
    q = assemble(ChargeSpec(1, "plus", 6))
    plan = build_cover(q)
    covered = set()
    for s in q.terms:
        if any(contains(w, s) for w in plan.words):
            covered.add(s)
    assert covered == set(q.terms)


def test_cover_empty_charge_rejected():
    with pytest.raises(ValueError):
        build_cover(PauliPolynomial(2))


def test_estimate_deterministic_outcome():
    q = PauliPolynomial(2)
    q.add_term(PauliString.from_letters("ZZ"), DeltaPoly((1,)))
    plan = MeasurementPlan((PauliWord("ZZ"),), 100)
    records = ShotRecords(2)
    records.add(PauliWord("ZZ"), {"00": 100})
    est = estimate(records, plan, q, DELTA)
    assert est.value == 1.0
    assert est.std_uncertainty == 0.0


def test_estimate_requires_coverage_and_counts():
    q = PauliPolynomial(2)
    q.add_term(PauliString.from_letters("XX"), DeltaPoly((1,)))
    plan = MeasurementPlan((PauliWord("ZZ"),), 10)
    records = ShotRecords(2)
    records.add(PauliWord("ZZ"), {"00": 10})
    with pytest.raises(CoverageError):
        estimate(records, plan, q, DELTA)
    bad = ShotRecords(2)
    bad.add(PauliWord("ZZ"), {"00": 7})
    with pytest.raises(ValueError):
        estimate(bad, plan, PauliPolynomial(2), DELTA)


def _sample_records(plan, dists, seed, n):
    records = ShotRecords(n)
    for wi, w in enumerate(plan.words):
        draws = sim.shot_rng(seed, wi).multinomial(plan.shots_per_word, dists[w.letters])
        records.add(w, {sim.bitstring(i, n): int(c) for i, c in enumerate(draws) if c})
    return records


def test_estimator_and_variance_unbiased():
    n = 4
    q = assemble(ChargeSpec(1, "plus", n))
    plan0 = build_cover(q)
    plan = MeasurementPlan(plan0.words, 150)
    rng = np.random.default_rng(7)
    amp = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi = sim.StateVector(n, amp / np.linalg.norm(amp))
    exact = sim.exact_expectation(psi, q, DELTA)
    dists = {w.letters: sim.rotated_probabilities(psi, w.letters) for w in plan.words}

    reps = 500
    vals = np.empty(reps)
    s2 = np.empty(reps)
    for r in range(reps):
        est = estimate(_sample_records(plan, dists, 1000 + r, n), plan, q, DELTA)
        vals[r] = est.value
        s2[r] = est.std_uncertainty**2
    stderr = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - exact) < 4 * stderr
    assert abs(s2.mean() / vals.var(ddof=1) - 1.0) < 0.10


def test_exact_estimator_variance_matches_empirical():
    n = 2
    q = PauliPolynomial(n)
    q.add_term(PauliString.from_letters("ZZ"), DeltaPoly((1,)))
    q.add_term(PauliString.from_letters("ZI"), DeltaPoly((2,)))
    plan = MeasurementPlan((PauliWord("ZZ"),), 50)
    psi = sim.StateVector.from_spec(InitialStateSpec("XX", (0, 0)))
    dists = {"ZZ": sim.rotated_probabilities(psi, "ZZ")}
    mean, sd = exact_estimator_variance(dists, plan, q, DELTA)
    reps = 4000
    vals = np.empty(reps)
    for r in range(reps):
        est = estimate(_sample_records(plan, dists, 2000 + r, n), plan, q, DELTA)
        vals[r] = est.value
    assert abs(vals.mean() - mean) < 5 * vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.std(ddof=1) / sd - 1.0) < 0.1


def test_covariance_only_through_shared_words():
    n = 2
    # terms measured by disjoint word sets: variance adds, no cross term
    qa = PauliPolynomial(n)
    qa.add_term(PauliString.from_letters("XI"), DeltaPoly((1,)))
    qb = PauliPolynomial(n)
    qb.add_term(PauliString.from_letters("IZ"), DeltaPoly((1,)))
    qab = PauliPolynomial(n)
    qab.add_term(PauliString.from_letters("XI"), DeltaPoly((1,)))
    qab.add_term(PauliString.from_letters("IZ"), DeltaPoly((1,)))

    plan = MeasurementPlan((PauliWord("XZ"), PauliWord("ZZ")), 200)
    rng = np.random.default_rng(3)
    amp = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi = sim.StateVector(n, amp / np.linalg.norm(amp))
    dists = {w.letters: sim.rotated_probabilities(psi, w.letters) for w in plan.words}

    # XI is covered by XZ only; IZ by both words: make the disjoint case
    plan_a = MeasurementPlan((PauliWord("XX"),), 200)
    plan_b = MeasurementPlan((PauliWord("ZZ"),), 200)
    dists_a = {"XX": sim.rotated_probabilities(psi, "XX")}
    dists_b = {"ZZ": sim.rotated_probabilities(psi, "ZZ")}
    _, sd_a = exact_estimator_variance(dists_a, plan_a, qa, DELTA)
    _, sd_b = exact_estimator_variance(dists_b, plan_b, qb, DELTA)
    both = MeasurementPlan((PauliWord("XX"), PauliWord("ZZ")), 200)
    dists_both = {**dists_a, **dists_b}
    _, sd_ab = exact_estimator_variance(dists_both, both, qab, DELTA)
    assert sd_ab == pytest.approx(np.sqrt(sd_a**2 + sd_b**2), rel=1e-9)

    # shared-word case: covariance shifts the total away from the quadrature sum
    qzz = PauliPolynomial(n)
    qzz.add_term(PauliString.from_letters("ZI"), DeltaPoly((1,)))
    qzz.add_term(PauliString.from_letters("IZ"), DeltaPoly((1,)))
    _, sd_shared = exact_estimator_variance(dists_b, plan_b, qzz, DELTA)
    qz1 = PauliPolynomial(n)
    qz1.add_term(PauliString.from_letters("ZI"), DeltaPoly((1,)))
    _, sd_z1 = exact_estimator_variance(dists_b, plan_b, qz1, DELTA)
    qz2 = PauliPolynomial(n)
    qz2.add_term(PauliString.from_letters("IZ"), DeltaPoly((1,)))
    _, sd_z2 = exact_estimator_variance(dists_b, plan_b, qz2, DELTA)
    assert abs(sd_shared**2 - (sd_z1**2 + sd_z2**2)) > 1e-4


def test_single_shot_pair_skipped_with_diagnostic():
    n = 2
    q = PauliPolynomial(n)
    q.add_term(PauliString.from_letters("ZI"), DeltaPoly((1,)))
    q.add_term(PauliString.from_letters("IZ"), DeltaPoly((1,)))
    plan = MeasurementPlan((PauliWord("ZZ"),), 1)
    records = ShotRecords(n)
    records.add(PauliWord("ZZ"), {"01": 1})
    est = estimate(records, plan, q, DELTA)
    assert any("n_PP' = 1" in d for d in est.diagnostics)
    assert est.std_uncertainty == 0.0


def test_plan_serialization():
    plan = MeasurementPlan((PauliWord("XY"), PauliWord("ZZ")), 7)
    back = MeasurementPlan.from_dict(plan.to_dict())
    assert back == plan
    records = ShotRecords(2)
    records.add(PauliWord("XY"), {"01": 4, "10": 3})
    back_r = ShotRecords.from_dict(records.to_dict())
    assert back_r.counts == records.counts
