"""Conserved charges of the Trotterized XXX chain.

Charges are exact objects: sums of Pauli strings whose coefficients are
integer polynomials in the Trotter step ``delta``.  The module provides

- :class:`DeltaPoly`, integer polynomials in ``delta``;
- :class:`PauliPolynomial`, a charge or charge density as a map
  ``PauliString -> DeltaPoly``;
- hard-coded low-order window densities (:func:`density`);
- :func:`boost_step`, one rung of the boost recursion, evaluated as a direct
  commutator on translation-covariant operator sums and collapsed back to a
  single gauge-fixed window density;
- :func:`assemble`, periodic assembly of a density into a charge on N sites;
- dense helpers (:func:`to_matrix`, :func:`transfer_matrix`,
  :func:`step_unitary`) used for verification.

Window densities live on ``2n+1`` sites.  A plus density is understood to be
placed on windows starting at even chain positions, a minus density on odd
ones; ``variant="dif"`` is the exactly-divided difference ``(Q+ - Q-)/delta``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .pauli import CODE_LETTERS, LETTER_CODES, PauliString, commutes, mul

GAUGE = "no-identity-on-last-two-window-sites"

VARIANTS = ("plus", "minus", "dif")

_AXES = "XYZ"

# Levi-Civita symbol over letter pairs: _EPS[(a, b)] = (c, sign) with
# eps_{abc} = sign; equal-letter pairs are absent.
_EPS = {}
for _i, _a in enumerate(_AXES):
    for _j, _b in enumerate(_AXES):
        if _i == _j:
            continue
        _k = 3 - _i - _j
        _sign = 1 if (_j - _i) % 3 == 1 else -1
        _EPS[(_a, _b)] = (_AXES[_k], _sign)


class DeltaPoly:
    """Integer polynomial in delta; index m holds the coefficient of delta^m.

    Immutable; trailing zeros are trimmed so the zero polynomial is ().
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, *a):
        raise AttributeError("DeltaPoly is immutable")

    @classmethod
    def const(cls, c: int) -> "DeltaPoly":
        return cls((c,))

    @classmethod
    def delta_power(cls, m: int, c: int = 1) -> "DeltaPoly":
        return cls((0,) * m + (c,))

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, DeltaPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "DeltaPoly") -> "DeltaPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return DeltaPoly(out)

    def __neg__(self) -> "DeltaPoly":
        return DeltaPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "DeltaPoly") -> "DeltaPoly":
        return self + (-other)

    def __mul__(self, other) -> "DeltaPoly":
        if isinstance(other, int):
            return DeltaPoly(tuple(c * other for c in self.coeffs))
        out = [0] * (len(self.coeffs) + len(other.coeffs))
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return DeltaPoly(out)

    __rmul__ = __mul__

    def shift(self, m: int) -> "DeltaPoly":
        """Multiply by delta^m."""
        if not self.coeffs:
            return self
        return DeltaPoly((0,) * m + self.coeffs)

    def divexact_delta(self) -> "DeltaPoly":
        """Exact division by delta; raises if the constant term survives."""
        if self.coeffs and self.coeffs[0] != 0:
            raise ValueError("polynomial not divisible by delta")
        return DeltaPoly(self.coeffs[1:])

    def __call__(self, delta: float) -> float:
        out = 0.0
        for c in reversed(self.coeffs):
            out = out * delta + c
        return out

    def __repr__(self):
        return f"DeltaPoly({self.coeffs})"


class PauliPolynomial:
    """Operator-valued polynomial: sum of poly(delta) * PauliString.

    Keys are canonical (phase_power 0); any unit in {+-1, +-i} produced by
    operator products is folded into the integer coefficients, and folding an
    odd power of i is an error because charges stay Hermitian with real
    coefficients.  Identity-string terms are rejected: charges and densities
    are traceless by construction.
    """

    __slots__ = ("n_sites", "terms", "_ordered", "_masks")

    def __init__(self, n_sites: int):
        self.n_sites = n_sites
        self.terms: dict[PauliString, DeltaPoly] = {}
        self._ordered = None
        self._masks = None

    def add_term(self, string: PauliString, poly: DeltaPoly):
        if string.n_sites != self.n_sites:
            raise ValueError("string size does not match polynomial register")
        if poly.is_zero():
            return
        if string.is_identity():
            raise ValueError("identity term in a traceless charge")
        k = string.phase_power
        if k % 2:
            raise ValueError("imaginary unit cannot be folded into integer coefficients")
        if k == 2:
            poly = -poly
            string = string.with_phase(0)
        self._ordered = None
        self._masks = None
        cur = self.terms.get(string)
        new = poly if cur is None else cur + poly
        if new.is_zero():
            self.terms.pop(string, None)
        else:
            self.terms[string] = new

    def add(self, other: "PauliPolynomial", scale: DeltaPoly | int = 1):
        if isinstance(scale, int):
            scale = DeltaPoly.const(scale)
        for s, p in other.terms.items():
            self.add_term(s, p * scale)

    def coefficient(self, string: PauliString) -> DeltaPoly:
        return self.terms.get(string.with_phase(0), DeltaPoly())

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return (
            isinstance(other, PauliPolynomial)
            and self.n_sites == other.n_sites
            and self.terms == other.terms
        )

    def items(self):
        """Terms in a canonical order, so float folds are reproducible."""
        if self._ordered is None:
            self._ordered = sorted(
                self.terms.items(), key=lambda kv: (kv[0].x_mask, kv[0].z_mask)
            )
        return self._ordered

    def mask_arrays(self):
        """(x_masks, z_masks, units) over ordered terms, for bulk evaluation.

        ``units`` carries the i^(Y-count) factor of each string so that
        coefficient * unit * (-1)^(z.b) reproduces the matrix elements.
        """
        if self._masks is None:
            xs = np.array([s.x_mask for s, _ in self.items()], dtype=np.int64)
            zs = np.array([s.z_mask for s, _ in self.items()], dtype=np.int64)
            units = np.array(
                [1j ** ((s.x_mask & s.z_mask).bit_count() % 4) for s, _ in self.items()]
            )
            self._masks = (xs, zs, units)
        return self._masks

    def coefficients(self, delta: float) -> np.ndarray:
        return np.array([p(delta) for _, p in self.items()])

    def x_groups(self):
        """Terms grouped by x_mask: list of (x, z_masks, term_indices).

        Strings sharing an x_mask differ only in sign pattern, so a whole
        group is evaluated by one Walsh transform of a single overlap vector.
        """
        xs, zs, _ = self.mask_arrays()
        order = np.argsort(xs, kind="stable")
        groups = []
        lo = 0
        while lo < len(order):
            hi = lo
            x = xs[order[lo]]
            while hi < len(order) and xs[order[hi]] == x:
                hi += 1
            idx = order[lo:hi]
            groups.append((int(x), zs[idx], idx))
            lo = hi
        return groups

    def evaluated(self, delta: float) -> dict[PauliString, float]:
        return {s: p(delta) for s, p in self.terms.items()}

    # -- serialization (contract consumed by measure and cli) ----------

    def to_dict(self, order: int | None = None, variant: str | None = None) -> dict:
        doc = {
            "n_sites": self.n_sites,
            "order": order,
            "variant": variant,
            "terms": [
                {"pauli": s.letters(), "coeffs": list(p.coeffs)}
                for s, p in sorted(self.terms.items(), key=lambda kv: kv[0].letters())
            ],
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PauliPolynomial":
        poly = cls(doc["n_sites"])
        for t in doc["terms"]:
            poly.add_term(PauliString.from_letters(t["pauli"]), DeltaPoly(t["coeffs"]))
        return poly


# ---------------------------------------------------------------------------
# dot / cross expansions
# ---------------------------------------------------------------------------


def _vector(site: int):
    """The Pauli 3-vector at ``site`` as component -> {letter-map: coeff}."""
    return [{((site, ax),): 1} for ax in _AXES]


def _cross(u, v):
    """Cross product of two operator-valued 3-vectors on disjoint sites."""
    out = [{}, {}, {}]
    for i, a in enumerate(_AXES):
        for j, b in enumerate(_AXES):
            if a == b:
                continue
            c, sign = _EPS[(a, b)]
            k = _AXES.index(c)
            for mono_u, cu in u[i].items():
                for mono_v, cv in v[j].items():
                    mono = tuple(sorted(mono_u + mono_v))
                    out[k][mono] = out[k].get(mono, 0) + sign * cu * cv
    return [{m: c for m, c in comp.items() if c} for comp in out]


def _dot(u, v):
    out = {}
    for i in range(3):
        for mono_u, cu in u[i].items():
            for mono_v, cv in v[i].items():
                mono = tuple(sorted(mono_u + mono_v))
                out[mono] = out.get(mono, 0) + cu * cv
    return {m: c for m, c in out.items() if c}


def dot_cross(*sites: int) -> dict:
    """Expand ``sigma_a . (sigma_b x sigma_c x ...)``, right-nested.

    With a single pair this is the plain dot product.  Returns a map from
    monomials ``((site, letter), ...)`` to integer coefficients; all sites
    must be distinct so no operator reordering phases arise.
    """
    if len(sites) < 2:
        raise ValueError("need at least two sites")
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    vec = _vector(sites[-1])
    for s in sites[-2:0:-1]:
        vec = _cross(_vector(s), vec)
    return _dot(_vector(sites[0]), vec)


def _window_poly(n_sites: int, combo) -> PauliPolynomial:
    """Build a window density from (DeltaPoly, site-tuple) contributions."""
    out = PauliPolynomial(n_sites)
    for poly, sites in combo:
        for mono, c in dot_cross(*sites).items():
            letters = ["I"] * n_sites
            for site, ax in mono:
                letters[site - 1] = ax
            out.add_term(PauliString.from_letters("".join(letters)), poly * c)
    return out


# ---------------------------------------------------------------------------
# hard-coded low-order densities
# ---------------------------------------------------------------------------


def density(order: int, variant: str) -> PauliPolynomial:
    """The low-order window densities.

    ``variant`` is ``"plus"`` or ``"minus"``; the window has ``2*order + 1``
    sites.  Higher orders come from :func:`boost_step`.

    The quadratic term of the order-1 density is ``delta^2 sigma_1.sigma_3``:
    with a middle-bond quadratic term instead, the assembled charge fails to
    commute with the evolution step (and the exactly-known product-state
    expectation values come out wrong), so that variant is rejected by the
    conservation tests.
    """
    if variant not in ("plus", "minus"):
        raise ValueError(f"unknown density variant {variant!r}")
    s = 1 if variant == "plus" else -1
    one = DeltaPoly.const
    dp = DeltaPoly.delta_power
    if order == 1:
        return _window_poly(
            3,
            [
                (one(1), (1, 2)),
                (one(1), (2, 3)),
                (dp(1, -s), (1, 2, 3)),
                (dp(2), (1, 3)),
            ],
        )
    if order == 2:
        return _window_poly(
            5,
            [
                (dp(1, -2 * s), (3, 4)),
                (dp(1, -2 * s), (4, 5)),
                (dp(1, 2 * s), (3, 5)),
                (DeltaPoly((-1, 0, 1)), (3, 4, 5)),
                (one(-1), (2, 3, 4)),
                (dp(2, -1), (2, 3, 5)),
                (dp(2, -1), (1, 3, 4)),
                (dp(4, -1), (1, 3, 5)),
                (dp(1, s), (2, 3, 4, 5)),
                (dp(1, s), (1, 2, 3, 4)),
                (dp(3, s), (1, 3, 4, 5)),
                (dp(3, s), (1, 2, 3, 5)),
                (dp(2, -1), (1, 2, 3, 4, 5)),
            ],
        )
    raise ValueError("hard-coded densities exist for orders 1 and 2 only")


# ---------------------------------------------------------------------------
# boost recursion
# ---------------------------------------------------------------------------

# A local term on the infinite chain: (start, letters) where ``letters`` is a
# tuple over {1, 2, 3} = X, Y, Z with nonzero first and last entries
# (identities inside are allowed as 0) and ``start`` is the absolute site of
# the first entry.


def _local_from_window(poly: PauliPolynomial, offset: int) -> dict:
    terms = {}
    for s, p in poly.items():
        codes = [s.code(j) for j in range(1, s.n_sites + 1)]
        lo = next(i for i, c in enumerate(codes) if c)
        hi = max(i for i, c in enumerate(codes) if c)
        key = (offset + lo, tuple(codes[lo : hi + 1]))
        terms[key] = terms.get(key, DeltaPoly()) + p
    return {k: v for k, v in terms.items() if not v.is_zero()}


def _string_on(span_lo: int, span_n: int, start: int, codes) -> PauliString:
    x = z = 0
    for i, c in enumerate(codes):
        j = start - span_lo + i
        x |= (c & 1) << j
        z |= (c >> 1) << j
    return PauliString(span_n, x, z, 0)


def _half_i_commutator(b_start, b_codes, t_start, t_codes):
    """(i/2) [b, t] for two local Pauli monomials.

    Returns None when they commute, else ``(start, codes, sign)`` with sign
    in {+1, -1}; an even product phase would break Hermiticity and raises.
    """
    b_end = b_start + len(b_codes) - 1
    t_end = t_start + len(t_codes) - 1
    if b_end < t_start or t_end < b_start:
        return None
    lo = min(b_start, t_start)
    n = max(b_end, t_end) - lo + 1
    bs = _string_on(lo, n, b_start, b_codes)
    ts = _string_on(lo, n, t_start, t_codes)
    if commutes(bs, ts):
        return None
    prod = mul(bs, ts)
    k = prod.phase_power
    if k % 2 == 0:
        raise ValueError("anticommuting Hermitian product with real phase")
    sign = 1 if (k + 1) % 4 == 0 else -1
    codes = []
    for j in range(n):
        codes.append(((prod.x_mask >> j) & 1) | (((prod.z_mask >> j) & 1) << 1))
    i0 = next(i for i, c in enumerate(codes) if c)
    i1 = max(i for i, c in enumerate(codes) if c)
    return lo + i0, tuple(codes[i0 : i1 + 1]), sign


def _boost_monomials():
    """Constituent monomials of one boost block, with delta-power factors.

    For the block anchored at ``l`` the sites are A=2l-3, B=2l-2, C=2l-1,
    D=2l (returned as offsets relative to A); entries are
    (site-offsets, delta_power, coefficient).
    """
    out = []
    for sites, m, c in [
        ((0, 1), 0, 1),       # sigma_A . sigma_B
        ((2, 3), 0, 1),       # sigma_C . sigma_D
        ((1, 2), 0, 2),       # 2 sigma_B . sigma_C
        ((1, 3), 2, 1),       # delta^2 sigma_B . sigma_D
        ((0, 2), 2, 1),       # delta^2 sigma_A . sigma_C
        ((0, 1, 2), 1, 1),    # +delta sigma_A . (sigma_B x sigma_C)
        ((1, 2, 3), 1, -1),   # -delta sigma_B . (sigma_C x sigma_D)
    ]:
        for mono, coeff in dot_cross(*[s + 1 for s in sites]).items():
            codes = [0, 0, 0, 0]
            for site, ax in mono:
                codes[site - 1] = LETTER_CODES[ax]
            lo = next(i for i, v in enumerate(codes) if v)
            hi = max(i for i, v in enumerate(codes) if v)
            out.append((lo, tuple(codes[lo : hi + 1]), m, c * coeff))
    return out


_BOOST_MONOMIALS = _boost_monomials()


class GaugeError(RuntimeError):
    """The boost commutator did not collapse to a consistent window density."""


def boost_step(q_n: PauliPolynomial, order: int, variant: str = "plus") -> PauliPolynomial:
    """One boost rung: window density of order ``n`` -> order ``n+1``.

    The commutator of the boost operator with the translation-covariant sum
    of ``q_n`` windows is evaluated exactly on the infinite chain; the result
    is collapsed to a single window by shifting every term in steps of two
    sites until it acts nontrivially on one of the last two window sites (the
    density gauge).  A nonzero obstruction in the collapse means the input
    was not a conserved density.
    """
    if q_n.n_sites != 2 * order + 1:
        raise ValueError("density window does not match its order")
    offset = 0 if variant == "plus" else 1
    local = _local_from_window(q_n, offset)
    in_lo, in_hi = offset, offset + 2 * order

    r_acc: dict = {}
    c_acc: dict = {}

    def bump(acc, key, poly):
        cur = acc.get(key)
        new = poly if cur is None else cur + poly
        if new.is_zero():
            acc.pop(key, None)
        else:
            acc[key] = new

    l_min = (in_lo - 3) // 2
    l_max = (in_hi + 3) // 2 + 2
    for (t_start, t_codes), t_poly in local.items():
        for l in range(l_min, l_max + 1):
            a_site = 2 * l - 3
            for b_off, b_codes, m, c in _BOOST_MONOMIALS:
                res = _half_i_commutator(a_site + b_off, b_codes, t_start, t_codes)
                if res is None:
                    continue
                start, codes, sign = res
                poly = t_poly.shift(m) * (sign * c)
                bump(r_acc, (start, codes), poly * l)
                bump(c_acc, (start, codes), poly)

    # Collapse: the output window is [offset, offset + 2*order + 2]; each
    # term is shifted by a multiple of two sites so that its last nontrivial
    # site lands on one of the final two window sites.
    out_hi = offset + 2 * order + 2
    last_two = (out_hi - 1, out_hi)

    def canonical_shift(start, codes):
        end = start + len(codes) - 1
        target = last_two[0] if (last_two[0] - end) % 2 == 0 else last_two[1]
        shift2 = (target - end) // 2
        return shift2

    collapsed: dict = {}
    obstruction: dict = {}
    for (start, codes), poly in r_acc.items():
        m2 = canonical_shift(start, codes)
        bump(collapsed, (start + 2 * m2, codes), poly)
    for (start, codes), poly in c_acc.items():
        m2 = canonical_shift(start, codes)
        key = (start + 2 * m2, codes)
        bump(obstruction, key, poly)
        if m2:
            bump(collapsed, key, poly * m2)
    if obstruction:
        raise GaugeError(
            "boost collapse obstruction: input density is not conserved "
            f"({len(obstruction)} orbits with nonzero weight-sum)"
        )

    out = PauliPolynomial(2 * order + 3)
    for (start, codes), poly in collapsed.items():
        if start < offset or start + len(codes) - 1 > out_hi:
            raise GaugeError("collapsed term does not fit the gauge window")
        letters = ["I"] * (2 * order + 3)
        for i, v in enumerate(codes):
            if v:
                letters[start - offset + i] = CODE_LETTERS[v]
        out.add_term(PauliString.from_letters("".join(letters)), poly)
    return out


_DENSITY_CACHE: dict = {}


def _density_cache_path(order: int, variant: str) -> str:
    return os.path.join(
        cache_dir(), f"density-n{order}-{variant}-{GAUGE}-{__version__}.json"
    )


def window_density(order: int, variant: str) -> PauliPolynomial:
    """Window density of any order: hard-coded for n <= 2, boosted above.

    Boosting to high orders takes noticeable time (the term count grows
    roughly exponentially), so generated densities are memoized on disk,
    keyed by (order, variant, gauge, code version).
    """
    if variant not in ("plus", "minus"):
        raise ValueError(f"unknown density variant {variant!r}")
    if order < 1:
        raise ValueError("order must be >= 1")
    key = (order, variant)
    if key in _DENSITY_CACHE:
        return _DENSITY_CACHE[key]
    if order <= 2:
        out = density(order, variant)
    else:
        path = _density_cache_path(order, variant)
        if os.path.exists(path):
            with open(path) as fh:
                out = PauliPolynomial.from_dict(json.load(fh))
        else:
            out = boost_step(window_density(order - 1, variant), order - 1, variant)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            tmp = path + ".tmp"
            with open(tmp, "w") as fh:
                json.dump(out.to_dict(order, variant), fh)
            os.replace(tmp, path)
    _DENSITY_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# periodic assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChargeSpec:
    """Which charge to build: order n, variant, chain length N."""

    order: int
    variant: str
    n_sites: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.n_sites % 2:
            raise ValueError("chain length must be even")
        if self.n_sites <= 2 * self.order + 1:
            raise ValueError(
                f"chain too short: need N > 2n+1 = {2 * self.order + 1}, got {self.n_sites}"
            )

    @property
    def label(self) -> str:
        suffix = {"plus": "+", "minus": "-", "dif": "dif"}[self.variant]
        return f"Q{self.order}{suffix}"


def _assemble_variant(order: int, variant: str, n_sites: int) -> PauliPolynomial:
    q = window_density(order, variant)
    width = 2 * order + 1
    out = PauliPolynomial(n_sites)
    starts = range(0, n_sites, 2) if variant == "plus" else range(1, n_sites + 1, 2)
    for start in starts:
        for s, p in q.items():
            letters = ["I"] * n_sites
            for w in range(1, width + 1):
                ch = s.letter(w)
                if ch != "I":
                    site = (start + w - 2) % n_sites  # 0-based chain position
                    letters[site] = ch
            out.add_term(PauliString.from_letters("".join(letters)), p)
    return out


def assemble(spec: ChargeSpec) -> PauliPolynomial:
    """Periodic charge on N sites; ``dif`` is (Q+ - Q-)/delta, exactly."""
    if spec.variant in ("plus", "minus"):
        return _assemble_variant(spec.order, spec.variant, spec.n_sites)
    plus = _assemble_variant(spec.order, "plus", spec.n_sites)
    minus = _assemble_variant(spec.order, "minus", spec.n_sites)
    out = PauliPolynomial(spec.n_sites)
    keys = set(plus.terms) | set(minus.terms)
    for s in keys:
        diff = plus.coefficient(s) - minus.coefficient(s)
        if diff.is_zero():
            continue
        try:
            out.add_term(s, diff.divexact_delta())
        except ValueError as exc:
            raise ValueError(
                "Q+(0) != Q-(0): difference not divisible by delta"
            ) from exc
    return out


# ---------------------------------------------------------------------------
# disk cache for generated charges
# ---------------------------------------------------------------------------


def cache_dir() -> str:
    return os.environ.get(
        "TROTTERCHAIN_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "trotterchain")
    )


def assemble_cached(spec: ChargeSpec) -> PauliPolynomial:
    """Like :func:`assemble` but memoized on disk; keyed by (n, variant, N, gauge, version)."""
    path = os.path.join(
        cache_dir(),
        f"charge-n{spec.order}-{spec.variant}-N{spec.n_sites}-{GAUGE}-{__version__}.json",
    )
    if os.path.exists(path):
        with open(path) as fh:
            return PauliPolynomial.from_dict(json.load(fh))
    out = assemble(spec)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(out.to_dict(spec.order, spec.variant), fh)
    os.replace(tmp, path)
    return out


# ---------------------------------------------------------------------------
# dense verification helpers
# ---------------------------------------------------------------------------

MAX_DENSE_SITES = 14


def to_matrix(p: PauliPolynomial, delta: float) -> np.ndarray:
    """Dense Hermitian matrix of a charge at a numeric delta."""
    if p.n_sites > MAX_DENSE_SITES:
        raise ValueError(f"dense budget exceeded: N={p.n_sites} > {MAX_DENSE_SITES}")
    dim = 1 << p.n_sites
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for s, poly in p.items():
        rows, vals = s.column_action()
        out[rows, cols] += poly(delta) * vals
    return out


def _permutation_matrix(n_sites: int, i: int, j: int) -> np.ndarray:
    """Swap of qubits i and j (1-based) on 2^n dimensions."""
    dim = 1 << n_sites
    idx = np.arange(dim)
    bi = (idx >> (i - 1)) & 1
    bj = (idx >> (j - 1)) & 1
    swapped = idx ^ ((bi ^ bj) << (i - 1)) ^ ((bi ^ bj) << (j - 1))
    m = np.zeros((dim, dim))
    m[swapped, idx] = 1.0
    return m


def r_check(lam: complex, n_sites: int, i: int, j: int) -> np.ndarray:
    """The two-site building block (1 + i lam P) / (1 + i lam), embedded."""
    if abs(1 + 1j * lam) < 1e-12:
        raise ValueError("spectral parameter at the pole of 1/(1+i lam)")
    dim = 1 << n_sites
    return (np.eye(dim) + 1j * lam * _permutation_matrix(n_sites, i, j)) / (1 + 1j * lam)


def step_unitary(delta: float, n_sites: int) -> np.ndarray:
    """Dense one-step evolution: odd-bond layer times even-bond layer.

    The even-bond layer acts on the state first.
    """
    if n_sites % 2:
        raise ValueError("chain length must be even")
    dim = 1 << n_sites
    u = np.eye(dim, dtype=complex)
    for j in range(1, n_sites // 2 + 1):  # even bonds (2j, 2j+1), cyclic
        u = r_check(delta, n_sites, 2 * j, (2 * j) % n_sites + 1) @ u
    for j in range(1, n_sites // 2 + 1):  # odd bonds (2j-1, 2j)
        u = r_check(delta, n_sites, 2 * j - 1, 2 * j) @ u
    return u


def transfer_matrix(lam: complex, delta: float, n_sites: int) -> np.ndarray:
    """T(lam) with staggered inhomogeneities (-1)^j delta/2.

    Built by multiplying R_{0j} = P_{0j} Rcheck_{0j} along the chain (the
    auxiliary space is an extra qubit above the chain) and tracing it out.
    """
    if n_sites > 10:
        raise ValueError("transfer-matrix budget is N <= 10")
    if min(abs(lam - 1j), abs(lam + 1j)) < 1e-12:
        raise ValueError("spectral parameter at the pole of 1/(1+i lam)")
    n_tot = n_sites + 1
    aux = n_tot  # auxiliary qubit index (1-based, highest)
    dim = 1 << n_tot
    m = np.eye(dim, dtype=complex)
    for j in range(1, n_sites + 1):  # ascending, applied right to left
        arg = lam - ((-1) ** j) * delta / 2.0
        rj = _permutation_matrix(n_tot, aux, j) @ r_check(arg, n_tot, aux, j)
        m = rj @ m
    # partial trace over the auxiliary qubit
    half = 1 << n_sites
    return m[:half, :half] + m[half:, half:]
