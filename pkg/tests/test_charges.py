import json

import numpy as np
import pytest

from trotterchain.charges import (
    ChargeSpec,
    DeltaPoly,
    GaugeError,
    PauliPolynomial,
    assemble,
    assemble_cached,
    boost_step,
    density,
    dot_cross,
    r_check,
    step_unitary,
    to_matrix,
    transfer_matrix,
    window_density,
)
from trotterchain.pauli import PauliString

DELTA = float(np.tan(0.3))


def build_window(n_sites, groups):
    """Window density from {delta_power: [(coeff, sites), ...]} dot/cross data."""
    out = PauliPolynomial(n_sites)
    for m, entries in groups.items():
        for coeff, sites in entries:
            for mono, c in dot_cross(*sites).items():
                letters = ["I"] * n_sites
                for site, ax in mono:
                    letters[site - 1] = ax
                out.add_term(
                    PauliString.from_letters("".join(letters)), DeltaPoly.delta_power(m, coeff * c)
                )
    return out


# ---------------------------------------------------------------------------
# DeltaPoly
# ---------------------------------------------------------------------------


def test_delta_poly_arithmetic():
    p = DeltaPoly((1, 2)) * DeltaPoly((0, 1))  # (1 + 2d) d
    assert p.coeffs == (0, 1, 2)
    assert (p - p).is_zero()
    assert p.shift(2).coeffs == (0, 0, 0, 1, 2)
    assert p.divexact_delta().coeffs == (1, 2)
    assert DeltaPoly((0, 0, 3)).divexact_delta().coeffs == (0, 3)
    with pytest.raises(ValueError):
        DeltaPoly((1, 1)).divexact_delta()
    assert DeltaPoly((1, 0, 0)).coeffs == (1,)  # trailing zeros trimmed
    assert DeltaPoly((2, -1))(0.5) == 1.5


# ---------------------------------------------------------------------------
# golden densities and boost matches
# ---------------------------------------------------------------------------


def test_density_order1_coefficients():
    q = density(1, "plus")
    assert q.coefficient(PauliString.from_letters("ZZI")) == DeltaPoly((1,))
    # expanding sigma_1.(sigma_2 x sigma_3) gives X1 Y2 Z3 with weight +1
    assert q.coefficient(PauliString.from_letters("XYZ")) == DeltaPoly((0, -1))
    # the quadratic piece couples the window edges (the middle-bond variant
    # fails conservation; see test_assembled_charges_are_conserved)
    assert q.coefficient(PauliString.from_letters("ZIZ")) == DeltaPoly((0, 0, 1))
    minus = density(1, "minus")
    assert minus.coefficient(PauliString.from_letters("XYZ")) == DeltaPoly((0, 1))


def test_density_plus_minus_agree_at_zero():
    plus = {s: p(0.0) for s, p in density(1, "plus").items() if p(0.0)}
    minus = {s: p(0.0) for s, p in density(1, "minus").items() if p(0.0)}
    assert plus == minus


def test_boost_matches_reference_order2():
    for variant in ("plus", "minus"):
        assert boost_step(density(1, variant), 1, variant) == density(2, variant)


def test_boosted_order2_at_zero_has_only_triples():
    q2 = boost_step(density(1, "plus"), 1, "plus")
    at_zero = {s: p(0.0) for s, p in q2.items() if p(0.0)}
    assert at_zero  # nonempty
    for s in at_zero:
        assert s.weight == 3


Q3_REFERENCE_GROUPS = {
    0: [(-4, (6, 7)), (2, (5, 7)), (-4, (5, 6)), (2, (4, 6)), (2, (4, 5, 6, 7)), (2, (3, 4, 5, 6))],
    1: [
        (10, (5, 6, 7)),
        (-2, (4, 6, 7)),
        (-4, (4, 5, 7)),
        (8, (4, 5, 6)),
        (-4, (3, 5, 6)),
        (-2, (3, 4, 6)),
        (-4, (3, 4, 5, 6, 7)),
        (-2, (2, 3, 4, 5, 6)),
    ],
    2: [
        (2, (6, 7)),
        (-10, (5, 7)),
        (2, (5, 6)),
        (2, (4, 7)),
        (2, (4, 6)),
        (2, (3, 6)),
        (-6, (4, 5, 6, 7)),
        (6, (3, 5, 6, 7)),
        (2, (3, 4, 6, 7)),
        (6, (3, 4, 5, 7)),
        (-6, (3, 4, 5, 6)),
        (2, (2, 3, 5, 6)),
        (2, (2, 3, 4, 5, 6, 7)),
        (2, (1, 2, 3, 4, 5, 6)),
    ],
    3: [
        (6, (5, 6, 7)),
        (-2, (4, 6, 7)),
        (4, (4, 5, 7)),
        (-2, (3, 6, 7)),
        (-8, (3, 5, 7)),
        (-2, (3, 4, 6)),
        (4, (3, 5, 6)),
        (-2, (3, 4, 7)),
        (4, (3, 4, 5, 6, 7)),
        (-2, (2, 3, 5, 6, 7)),
        (-2, (2, 3, 4, 5, 7)),
        (-2, (1, 3, 4, 5, 6)),
        (-2, (1, 2, 3, 5, 6)),
        (-2, (1, 2, 3, 4, 5, 6, 7)),
    ],
    4: [
        (-2, (6, 7)),
        (-8, (5, 7)),
        (-2, (5, 6)),
        (2, (4, 7)),
        (2, (3, 6)),
        (2, (3, 7)),
        (-2, (3, 5, 6, 7)),
        (2, (3, 4, 6, 7)),
        (-2, (3, 4, 5, 7)),
        (2, (2, 3, 5, 7)),
        (2, (1, 3, 5, 6)),
        (2, (1, 3, 4, 5, 6, 7)),
        (2, (1, 2, 3, 5, 6, 7)),
        (2, (1, 2, 3, 4, 5, 7)),
    ],
    5: [
        (4, (5, 6, 7)),
        (-2, (3, 6, 7)),
        (-2, (3, 4, 7)),
        (-2, (1, 3, 5, 6, 7)),
        (-2, (1, 3, 4, 5, 7)),
        (-2, (1, 2, 3, 5, 7)),
    ],
    6: [(-4, (5, 7)), (2, (3, 7)), (2, (1, 3, 5, 7))],
}


def test_boost_matches_reference_order3():
    got = boost_step(density(2, "plus"), 2, "plus")
    want = build_window(7, Q3_REFERENCE_GROUPS)
    assert got == want
    # the leading flat part starts -4 s6.s7 + 2 s5.s7 - 4 s5.s6 ...
    assert got.coefficient(PauliString.from_letters("IIIIIZZ")).coeffs[0] == -4
    assert got.coefficient(PauliString.from_letters("IIIIZIZ")).coeffs[0] == 2


def test_boost_rejects_nonconserved_input():
    bad = PauliPolynomial(3)
    bad.add_term(PauliString.from_letters("ZZI"), DeltaPoly((1,)))
    with pytest.raises(GaugeError):
        boost_step(bad, 1, "plus")


def test_term_count_grows_with_order():
    counts = [len(window_density(n, "plus")) for n in (1, 2, 3)]
    assert counts[0] < counts[1] < counts[2]


def test_gauge_no_identity_on_last_two_sites():
    for n in (1, 2, 3):
        q = window_density(n, "plus")
        for s in q.terms:
            assert any(s.letter(j) != "I" for j in (2 * n, 2 * n + 1))


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def test_assemble_window_count():
    q = assemble(ChargeSpec(1, "plus", 4))
    # two windows; the delta^2 edge terms of both land on the same strings
    oracle = PauliPolynomial(4)
    win = density(1, "plus")
    for start in (2, 4):  # chain positions of window site 1, distance two apart
        for s, p in win.items():
            letters = ["I"] * 4
            for w in range(1, 4):
                if s.letter(w) != "I":
                    letters[(start - 1 + w - 1) % 4] = s.letter(w)
            oracle.add_term(PauliString.from_letters("".join(letters)), p)
    assert q == oracle
    # both windows park their quadratic edge term on sites {2, 4}
    assert q.coefficient(PauliString.from_letters("IZIZ")) == DeltaPoly((0, 0, 2))


def test_charge_spec_validation():
    with pytest.raises(ValueError):
        ChargeSpec(1, "plus", 4 + 1)  # odd chain
    with pytest.raises(ValueError):
        ChargeSpec(2, "plus", 4)  # N > 2n+1 violated
    with pytest.raises(ValueError):
        ChargeSpec(1, "weird", 8)


def test_dif_charge_exact_division():
    q = assemble(ChargeSpec(1, "dif", 8))
    assert len(q) > 0  # division by delta succeeded, coefficients integer
    for _, poly in q.items():
        assert all(isinstance(c, int) for c in poly.coeffs)


def test_neel_expectation_closed_form():
    # closed form -(N/2)(2 - delta^2); the quadratic edge term flips the sign
    # of its contribution on the Neel state relative to the bond dots
    for n_sites, anchor in ((4, -3.81), (6, -5.71), (8, -7.62), (10, -9.52)):
        q = assemble(ChargeSpec(1, "plus", n_sites))
        idx = sum(1 << (j - 1) for j in range(2, n_sites + 1, 2))
        psi = np.zeros(1 << n_sites)
        psi[idx] = 1.0
        val = sum(p(DELTA) * s.expectation_statevector(psi).real for s, p in q.items())
        assert val == pytest.approx(-(n_sites / 2) * (2 - DELTA**2), abs=1e-12)
        assert val == pytest.approx(anchor, abs=0.005)


def test_assembled_charges_are_conserved():
    n_sites = 8
    u = step_unitary(DELTA, n_sites)
    for order in (1, 2, 3):
        for variant in ("plus", "minus", "dif"):
            q = to_matrix(assemble(ChargeSpec(order, variant, n_sites)), DELTA)
            assert np.abs(u @ q - q @ u).max() < 1e-10


def test_conservation_dense_ten_sites():
    u = step_unitary(DELTA, 10)
    q = to_matrix(assemble(ChargeSpec(3, "plus", 10)), DELTA)
    assert np.abs(u @ q - q @ u).max() < 1e-10


def test_conservation_fails_for_middle_bond_quadratic_variant():
    # the alternative order-1 density with delta^2 on the middle bond is not
    # conserved; this pins the corrected edge-coupled form
    alt = build_window(3, {0: [(1, (1, 2)), (1, (2, 3))], 1: [(-1, (1, 2, 3))], 2: [(1, (2, 3))]})
    out = PauliPolynomial(8)
    for start in (2, 4, 6, 8):
        for s, p in alt.items():
            letters = ["I"] * 8
            for w in range(1, 4):
                if s.letter(w) != "I":
                    letters[(start - 1 + w - 1) % 8] = s.letter(w)
            out.add_term(PauliString.from_letters("".join(letters)), p)
    u = step_unitary(DELTA, 8)
    q = to_matrix(out, DELTA)
    assert np.abs(u @ q - q @ u).max() > 1e-3


# ---------------------------------------------------------------------------
# dense helpers
# ---------------------------------------------------------------------------


def test_to_matrix_single_z():
    p = PauliPolynomial(1)
    p.add_term(PauliString.from_letters("Z"), DeltaPoly((1,)))
    assert np.allclose(to_matrix(p, 0.3), np.diag([1.0, -1.0]))


def test_to_matrix_at_zero_is_xxx_hamiltonian():
    n = 6
    q = to_matrix(assemble(ChargeSpec(1, "plus", n)), 0.0)
    want = np.zeros_like(q)
    for j in range(1, n + 1):
        k = j % n + 1
        for ax in "XYZ":
            want += (
                PauliString.single(n, j, ax).matrix() @ PauliString.single(n, k, ax).matrix()
            )
    assert np.abs(q - want).max() < 1e-12


def test_to_matrix_hermitian_and_budget():
    m = to_matrix(assemble(ChargeSpec(2, "plus", 8)), DELTA)
    assert np.abs(m - m.conj().T).max() < 1e-12
    big = PauliPolynomial(15)
    big.add_term(PauliString.single(15, 1, "Z"), DeltaPoly((1,)))
    with pytest.raises(ValueError):
        to_matrix(big, 0.0)


def test_dif_spectrum_symmetric_under_spin_flip():
    n = 4
    q = to_matrix(assemble(ChargeSpec(1, "dif", n)), DELTA)
    flip = PauliString(n, (1 << n) - 1, 0).matrix()  # X on every site
    vals = np.sort(np.linalg.eigvalsh(q))
    flipped = np.sort(np.linalg.eigvalsh(flip @ q @ flip))
    assert np.abs(vals - flipped).max() < 1e-10


# ---------------------------------------------------------------------------
# transfer matrices
# ---------------------------------------------------------------------------


def test_transfer_matrices_commute():
    rng = np.random.default_rng(5)
    n = 4
    for _ in range(10):
        lam, mu = rng.normal(size=2) + 1j * 0.2 * rng.normal(size=2)
        t1 = transfer_matrix(lam, DELTA, n)
        t2 = transfer_matrix(mu, DELTA, n)
        assert np.abs(t1 @ t2 - t2 @ t1).max() < 1e-10


def test_transfer_matrix_factorizes_step():
    n = 4
    u = np.linalg.inv(transfer_matrix(-DELTA / 2, DELTA, n)) @ transfer_matrix(DELTA / 2, DELTA, n)
    assert np.abs(u - step_unitary(DELTA, n)).max() < 1e-10


def test_rcheck_identity_at_zero_and_pole():
    assert np.allclose(r_check(0.0, 2, 1, 2), np.eye(4))
    with pytest.raises(ValueError):
        transfer_matrix(1j, DELTA, 4)


# ---------------------------------------------------------------------------
# export / cache
# ---------------------------------------------------------------------------


def test_export_round_trip(tmp_path):
    q = assemble(ChargeSpec(2, "plus", 6))
    doc = q.to_dict(2, "plus")
    text = json.dumps(doc)
    back = PauliPolynomial.from_dict(json.loads(text))
    assert back == q
    assert doc["n_sites"] == 6 and doc["order"] == 2 and doc["variant"] == "plus"
    assert all(isinstance(c, int) for t in doc["terms"] for c in t["coeffs"])


def test_assemble_cached_round_trip():
    spec = ChargeSpec(1, "plus", 6)
    first = assemble_cached(spec)
    again = assemble_cached(spec)
    assert first == again == assemble(spec)
