"""Exact algebra of N-site Pauli strings.

A string is stored bit-packed: ``x_mask`` has bit ``j-1`` set iff site ``j``
carries ``X`` or ``Y``, ``z_mask`` has bit ``j-1`` set iff site ``j`` carries
``Z`` or ``Y``.  Site 1 maps to the lowest-order bit; sites are cyclic, so
site ``N+1`` is site 1.  The operator represented is

    i**phase_power * W_1 (x) W_2 (x) ... (x) W_N,

with ``W_j in {I, X, Y, Z}`` read off the mask bits.  The global phase is
tracked as a power of ``i`` modulo 4 and never as a floating scalar, so all
downstream charge coefficients stay exact.

Text rendering writes site 1 leftmost, e.g. ``"IXZY"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# letter at code (x_bit | z_bit << 1)
CODE_LETTERS = "IXZY"
LETTER_CODES = {"I": 0, "X": 1, "Z": 2, "Y": 3}

# letter -> (x bit, z bit)
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


class SizeMismatchError(ValueError):
    """Two strings of different lengths were combined."""


@dataclass(frozen=True)
class PauliString:
    """One tensor product of single-site Paulis with a tracked phase."""

    n_sites: int
    x_mask: int
    z_mask: int
    phase_power: int = 0

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be positive, got {self.n_sites}")
        full = (1 << self.n_sites) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits outside the N-site register")
        object.__setattr__(self, "phase_power", self.phase_power % 4)

    # -- construction -------------------------------------------------

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls(n_sites, 0, 0, 0)

    @classmethod
    def from_letters(cls, letters: str, phase_power: int = 0) -> "PauliString":
        """Parse ``"IXZY"`` with site 1 leftmost."""
        x = z = 0
        for j, ch in enumerate(letters):
            try:
                bx, bz = _BITS[ch]
            except KeyError:
                raise ValueError(f"unknown Pauli letter {ch!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(letters), x, z, phase_power)

    @classmethod
    def single(cls, n_sites: int, site: int, letter: str) -> "PauliString":
        bx, bz = _BITS[letter]
        j = (site - 1) % n_sites
        return cls(n_sites, bx << j, bz << j, 0)

    # -- queries ------------------------------------------------------

    def code(self, site: int) -> int:
        """Letter code at ``site``: the bit pair (x | z << 1)."""
        j = (site - 1) % self.n_sites
        return ((self.x_mask >> j) & 1) | (((self.z_mask >> j) & 1) << 1)

    def letter(self, site: int) -> str:
        return CODE_LETTERS[self.code(site)]

    def letters(self) -> str:
        return "".join(self.letter(j) for j in range(1, self.n_sites + 1))

    @property
    def support_mask(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def weight(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def phase(self) -> complex:
        return _I_POW[self.phase_power]

    def __str__(self) -> str:
        pre = {0: "", 1: "i*", 2: "-", 3: "-i*"}[self.phase_power]
        return pre + self.letters()

    # -- unary operations ---------------------------------------------

    def with_phase(self, phase_power: int) -> "PauliString":
        return PauliString(self.n_sites, self.x_mask, self.z_mask, phase_power)

    def translate(self, k: int) -> "PauliString":
        """Cyclic shift of site labels by ``k`` (site j -> site j+k)."""
        n = self.n_sites
        k %= n
        full = (1 << n) - 1
        rot = lambda m: ((m << k) | (m >> (n - k))) & full if k else m
        return PauliString(n, rot(self.x_mask), rot(self.z_mask), self.phase_power)

    # -- dense interface ----------------------------------------------

    def column_action(self):
        """Sparse action on computational indices.

        Returns ``(rows, vals)`` with ``M[rows[b], b] = vals[b]`` the only
        nonzero entries; ``rows[b] = b ^ x_mask``.
        """
        n = self.n_sites
        cols = np.arange(1 << n, dtype=np.uint32)
        rows = cols ^ np.uint32(self.x_mask)
        par = np.bitwise_count(cols & np.uint32(self.z_mask)).astype(np.int64) & 1
        scale = _I_POW[(self.phase_power + (self.x_mask & self.z_mask).bit_count()) % 4]
        vals = np.where(par, -scale, scale)
        return rows, vals

    def matrix(self) -> np.ndarray:
        rows, vals = self.column_action()
        dim = 1 << self.n_sites
        m = np.zeros((dim, dim), dtype=complex)
        m[rows, np.arange(dim)] = vals
        return m

    def expectation_statevector(self, psi: np.ndarray) -> complex:
        """<psi| P |psi> in O(2^N)."""
        rows, vals = self.column_action()
        return complex(np.vdot(psi[rows], vals * psi))

    def expectation_density(self, rho: np.ndarray) -> complex:
        """tr(rho P) in O(4^N)."""
        rows, vals = self.column_action()
        cols = np.arange(rho.shape[0])
        return complex(np.sum(vals * rho[cols, rows]))


def _check_sizes(a: PauliString, b: PauliString):
    if a.n_sites != b.n_sites:
        raise SizeMismatchError(f"size mismatch: {a.n_sites} vs {b.n_sites}")


def mul(a: PauliString, b: PauliString) -> PauliString:
    """Exact operator product ``a * b`` with accumulated phase."""
    _check_sizes(a, b)
    x = a.x_mask ^ b.x_mask
    z = a.z_mask ^ b.z_mask
    # Convert each factor to X^x Z^z form (Y = i XZ), commute Z past X,
    # convert the result back; every step is a popcount.
    k = (
        a.phase_power
        + b.phase_power
        + (a.x_mask & a.z_mask).bit_count()
        + (b.x_mask & b.z_mask).bit_count()
        + 2 * (a.z_mask & b.x_mask).bit_count()
        - (x & z).bit_count()
    )
    return PauliString(a.n_sites, x, z, k % 4)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic form x_a.z_b + z_a.x_b is even."""
    _check_sizes(a, b)
    return ((a.x_mask & b.z_mask).bit_count() + (a.z_mask & b.x_mask).bit_count()) % 2 == 0


def trace_pair(a: PauliString, b: PauliString) -> complex:
    """tr(a b) / 2^N; nonzero iff the two strings share masks."""
    _check_sizes(a, b)
    if a.x_mask != b.x_mask or a.z_mask != b.z_mask:
        return 0.0 + 0.0j
    return mul(a, b).phase()


def translate(a: PauliString, k: int) -> PauliString:
    return a.translate(k)
