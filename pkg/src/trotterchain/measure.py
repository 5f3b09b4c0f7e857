"""Pauli-word measurement protocol: covers, shot records, charge estimator.

A word is a length-N string over {X, Y, Z} fixing a simultaneous measurement
basis.  A Pauli term is contained in a word when every non-identity letter
matches.  The estimator pools, for each term P, all words containing P; the
variance estimator keeps the covariances induced by that sharing, pooling
each pair (P, P') over the words containing both.

Shot records store outcome multiplicities per word: ``{bitstring: count}``
with site 1 leftmost, the same wire format the sampler emits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charges import PauliPolynomial
from .pauli import PauliString


@dataclass(frozen=True)
class PauliWord:
    letters: str

    def __post_init__(self):
        if any(ch not in "XYZ" for ch in self.letters):
            raise ValueError("a Pauli word has letters X, Y, Z only")

    @property
    def n_sites(self) -> int:
        return len(self.letters)

    def __str__(self):
        return self.letters


def contains(word: PauliWord, term: PauliString) -> bool:
    """True iff every non-identity letter of ``term`` matches ``word``."""
    if word.n_sites != term.n_sites:
        raise ValueError("word and term lengths differ")
    for j in range(1, term.n_sites + 1):
        ch = term.letter(j)
        if ch != "I" and ch != word.letters[j - 1]:
            return False
    return True


@dataclass(frozen=True)
class MeasurementPlan:
    words: tuple
    shots_per_word: int

    @property
    def total_shots(self) -> int:
        return self.shots_per_word * len(self.words)

    def to_dict(self) -> dict:
        return {"shots_per_word": self.shots_per_word, "words": [w.letters for w in self.words]}

    @classmethod
    def from_dict(cls, doc: dict) -> "MeasurementPlan":
        return cls(tuple(PauliWord(w) for w in doc["words"]), doc["shots_per_word"])


def _term_constraints(term: PauliString) -> dict:
    return {
        j: term.letter(j) for j in range(1, term.n_sites + 1) if term.letter(j) != "I"
    }


def _compatible(constraints: dict, other: dict) -> bool:
    return all(constraints.get(j, ch) == ch for j, ch in other.items())


def build_cover(charge: PauliPolynomial, shots_per_word: int = 1) -> MeasurementPlan:
    """Greedy word cover of all charge terms.

    Each round builds candidate words by merging compatible still-uncovered
    terms onto a seed term (unconstrained sites completed with Z) and emits
    the candidate covering the most uncovered terms, ties broken by
    lexicographic word order.  Terms may end up covered by several words.
    """
    if not charge.terms:
        raise ValueError("cannot build a cover for an empty charge")
    n = charge.n_sites
    uncovered = sorted((s.letters() for s in charge.terms), reverse=False)
    uncovered = [PauliString.from_letters(t) for t in uncovered]
    words: list[PauliWord] = []
    while uncovered:
        best = None
        for seed in uncovered:
            cons = dict(_term_constraints(seed))
            for other in uncovered:
                oc = _term_constraints(other)
                if _compatible(cons, oc):
                    cons.update(oc)
            letters = "".join(cons.get(j, "Z") for j in range(1, n + 1))
            word = PauliWord(letters)
            covered = sum(1 for t in uncovered if contains(word, t))
            key = (-covered, letters)
            if best is None or key < best[0]:
                best = (key, word)
        word = best[1]
        words.append(word)
        uncovered = [t for t in uncovered if not contains(word, t)]
    return MeasurementPlan(tuple(words), shots_per_word)


@dataclass
class ShotRecords:
    """Per-word outcome multiplicities; counts per word must equal n_W."""

    n_sites: int
    counts: dict = field(default_factory=dict)  # word letters -> {bitstring: int}

    def add(self, word: PauliWord, outcome_counts: dict):
        self.counts[word.letters] = dict(outcome_counts)

    def validate(self, plan: MeasurementPlan):
        for w in plan.words:
            c = self.counts.get(w.letters)
            if c is None:
                raise ValueError(f"no records for word {w}")
            if sum(c.values()) != plan.shots_per_word:
                raise ValueError(f"records for {w} do not sum to n_W")

    def to_dict(self) -> dict:
        return {"n_sites": self.n_sites, "counts": self.counts}

    @classmethod
    def from_dict(cls, doc: dict) -> "ShotRecords":
        return cls(doc["n_sites"], {w: dict(c) for w, c in doc["counts"].items()})


@dataclass
class ChargeEstimate:
    value: float
    std_uncertainty: float
    term_shots: dict  # term letters -> pooled shot count n_P
    diagnostics: tuple = ()


class CoverageError(ValueError):
    """Some charge term is not contained in any plan word."""


def _support_bits(term: PauliString) -> int:
    return term.support_mask


def _outcome_arrays(counts: dict, n_sites: int):
    idx = np.array(
        [sum(int(b) << j for j, b in enumerate(s)) for s in counts], dtype=np.int64
    )
    cnt = np.array(list(counts.values()), dtype=np.float64)
    return idx, cnt


def _parities(idx: np.ndarray, mask: int) -> np.ndarray:
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.int64(mask)).astype(np.int64) & 1)


def estimate(
    records: ShotRecords, plan: MeasurementPlan, charge: PauliPolynomial, delta: float
) -> ChargeEstimate:
    """Charge estimate with its unbiased variance estimate.

    The value pools each term over all covering words; the uncertainty keeps
    the word-sharing covariances, skips pairs pooled over a single shot
    (their variance weight is undefined), and clamps a slightly negative
    variance at zero.  Both degeneracies are reported as diagnostics.
    """
    records.validate(plan)
    terms = [(s, p(delta)) for s, p in charge.items()]
    n_w = plan.shots_per_word
    masks = np.array([_support_bits(s) for s, _ in terms], dtype=np.int64)

    word_cover = []  # per word: indices of the terms it contains
    for w in plan.words:
        word_cover.append([i for i, (s, _) in enumerate(terms) if contains(w, s)])
    covered = set(i for cov in word_cover for i in cov)
    missing = [terms[i][0].letters() for i in range(len(terms)) if i not in covered]
    if missing:
        raise CoverageError(f"terms not covered by any word: {missing[:5]}")

    # per word: parity-sum vector over its covered terms and the full
    # cross-sum matrix sum_i Pi_a Pi_b, each as one matrix product
    per_word_sums: dict = {}
    pair_stats: dict = {}  # (a, b) a <= b -> [word count, cross, sum_a, sum_b]
    for wi, w in enumerate(plan.words):
        cov = word_cover[wi]
        if not cov:
            continue
        idx, cnt = _outcome_arrays(records.counts[w.letters], records.n_sites)
        signs = 1.0 - 2.0 * (np.bitwise_count(idx[None, :] & masks[cov, None]) & 1)
        sums = signs @ cnt
        cross = (signs * cnt) @ signs.T
        for i, a in enumerate(cov):
            per_word_sums[(wi, a)] = float(sums[i])
            for j in range(i, len(cov)):
                b = cov[j]
                key = (a, b) if a <= b else (b, a)
                stat = pair_stats.get(key)
                if stat is None:
                    pair_stats[key] = [1, float(cross[i, j]), float(sums[i]), float(sums[j])]
                else:
                    stat[0] += 1
                    stat[1] += float(cross[i, j])
                    stat[2] += float(sums[i])
                    stat[3] += float(sums[j])

    n_p = {ti: 0 for ti in covered}
    s_p = {ti: 0.0 for ti in covered}
    for (wi, ti), val in per_word_sums.items():
        n_p[ti] += n_w
        s_p[ti] += val
    value = sum(c * s_p[ti] / n_p[ti] for ti, (_, c) in enumerate(terms))

    diagnostics = []
    var = 0.0
    skipped_pairs = 0
    for (a, b), (n_words, cross, sum_a, sum_b) in pair_stats.items():
        n_ab = n_w * n_words
        if n_ab <= 1:
            skipped_pairs += 1
            continue
        inner = cross - sum_a * sum_b / n_ab
        contrib = (n_ab / (n_p[a] * n_p[b])) * (terms[a][1] * terms[b][1] / (n_ab - 1)) * inner
        var += contrib if a == b else 2.0 * contrib
    if skipped_pairs:
        diagnostics.append(f"skipped {skipped_pairs} term pairs with n_PP' = 1")
    if var < 0.0:
        diagnostics.append(f"variance estimate {var:.3e} clamped at 0")
        var = 0.0

    term_shots = {terms[ti][0].letters(): n_p[ti] for ti in covered}
    return ChargeEstimate(value, float(np.sqrt(var)), term_shots, tuple(diagnostics))


def exact_estimator_variance(
    distributions: dict, plan: MeasurementPlan, charge: PauliPolynomial, delta: float
) -> tuple:
    """Expected value and true estimator standard deviation for a known state.

    ``distributions`` maps word letters to the exact outcome distribution in
    that word's basis.  Mirrors the finite-shot estimator with expectations
    in place of empirical sums; useful for deterministic error budgets.
    """
    terms = [(s, p(delta)) for s, p in charge.items()]
    n_w = plan.shots_per_word
    n = charge.n_sites
    idx = np.arange(1 << n, dtype=np.int64)

    word_cover = []
    for w in plan.words:
        word_cover.append([i for i, (s, _) in enumerate(terms) if contains(w, s)])
    covered = set(i for cov in word_cover for i in cov)
    if len(covered) != len(terms):
        raise CoverageError("plan does not cover the charge")

    masks = [_support_bits(s) for s, _ in terms]
    exp_single = {}
    for wi, w in enumerate(plan.words):
        p = distributions[w.letters]
        for ti in word_cover[wi]:
            exp_single[(wi, ti)] = float(p @ _parities(idx, masks[ti]))

    n_p = {ti: 0 for ti in covered}
    for (wi, ti) in exp_single:
        n_p[ti] += n_w
    mean = 0.0
    term_means = {}
    for ti, (s, c) in enumerate(terms):
        m = sum(exp_single[(wi, ti)] for wi in range(len(plan.words)) if (wi, ti) in exp_single)
        m /= len([wi for wi in range(len(plan.words)) if (wi, ti) in exp_single])
        term_means[ti] = m
        mean += c * m

    var = 0.0
    for wi, cov in enumerate(word_cover):
        p = distributions[plan.words[wi].letters]
        for a in cov:
            for b in cov:
                cross = float(p @ _parities(idx, masks[a] ^ masks[b]))
                cov_ab = cross - exp_single[(wi, a)] * exp_single[(wi, b)]
                var += terms[a][1] * terms[b][1] * n_w * cov_ab / (n_p[a] * n_p[b])
    return mean, float(np.sqrt(max(var, 0.0)))
