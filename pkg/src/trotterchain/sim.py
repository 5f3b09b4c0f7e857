"""Numerical state engines: pure statevector and noisy density matrix.

Gates are applied in place with bit-indexed strides (no full 2^N gate
matrices).  Site ``j`` lives on bit ``j-1``; a computational basis index
``b`` has site-j outcome ``(b >> (j-1)) & 1`` and renders as a bitstring
with site 1 leftmost, matching the Pauli text convention.

The noisy engine conjugates the density matrix by each gate and then applies
the configured channel once per touched site, covering initialization and
measurement-rotation gates as well; setting a channel to ``None`` exempts
the corresponding gate class.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .charges import PauliPolynomial
from .circuit import Circuit, Gate, InitialStateSpec, build_init, build_measurement_rotation
from .noise import KrausChannel

DM_MAX_SITES = 10

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_EIG_FLOOR = -1e-8


class BudgetError(ValueError):
    """A dense state exceeds the configured size budget."""


def bitstring(index: int, n_sites: int) -> str:
    """Render a basis index with site 1 leftmost."""
    return "".join(str((index >> j) & 1) for j in range(n_sites))


def index_of_bits(bits) -> int:
    return sum(int(b) << j for j, b in enumerate(bits))


# ---------------------------------------------------------------------------
# statevector engine
# ---------------------------------------------------------------------------


@dataclass
class StateVector:
    n_sites: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n_sites: int) -> "StateVector":
        amp = np.zeros(1 << n_sites, dtype=complex)
        amp[0] = 1.0
        return cls(n_sites, amp)

    @classmethod
    def basis(cls, n_sites: int, index: int) -> "StateVector":
        amp = np.zeros(1 << n_sites, dtype=complex)
        amp[index] = 1.0
        return cls(n_sites, amp)

    @classmethod
    def from_spec(cls, spec: InitialStateSpec) -> "StateVector":
        state = cls.zero(spec.n_sites)
        for g in build_init(spec):
            _apply_gate_sv(state.amplitudes, g, spec.n_sites)
        return state

    def copy(self) -> "StateVector":
        return StateVector(self.n_sites, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def density_matrix(self) -> "DensityMatrix":
        amp = self.amplitudes
        return DensityMatrix(self.n_sites, np.outer(amp, amp.conj()))


def _apply_1q_sv(amp: np.ndarray, m: np.ndarray, bit: int):
    view = amp.reshape(-1, 2, 1 << bit)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = m[0, 0] * a + m[0, 1] * b
    view[:, 1, :] = m[1, 0] * a + m[1, 1] * b


def _apply_cnot_sv(amp: np.ndarray, n: int, c_bit: int, t_bit: int):
    v = amp.reshape([2] * n)
    axc, axt = n - 1 - c_bit, n - 1 - t_bit
    sel10 = [slice(None)] * n
    sel11 = [slice(None)] * n
    sel10[axc] = 1
    sel11[axc] = 1
    sel10[axt] = 0
    sel11[axt] = 1
    tmp = v[tuple(sel10)].copy()
    v[tuple(sel10)] = v[tuple(sel11)]
    v[tuple(sel11)] = tmp


def _apply_gate_sv(amp: np.ndarray, gate: Gate, n: int):
    if gate.kind == "CNOT":
        c, t = gate.sites
        _apply_cnot_sv(amp, n, c - 1, t - 1)
    else:
        _apply_1q_sv(amp, gate.matrix_1q(), gate.sites[0] - 1)


def evolve_pure(circuit: Circuit, init: StateVector) -> StateVector:
    """Apply all circuit gates to a copy of ``init``."""
    if circuit.n_sites != init.n_sites:
        raise ValueError("circuit and state sizes differ")
    state = init.copy()
    for g in circuit.gates:
        _apply_gate_sv(state.amplitudes, g, state.n_sites)
    return state


# ---------------------------------------------------------------------------
# density-matrix engine
# ---------------------------------------------------------------------------


@dataclass
class DensityMatrix:
    n_sites: int
    entries: np.ndarray

    @classmethod
    def from_spec(cls, spec: InitialStateSpec) -> "DensityMatrix":
        return StateVector.from_spec(spec).density_matrix()

    @classmethod
    def completely_mixed(cls, n_sites: int) -> "DensityMatrix":
        dim = 1 << n_sites
        return cls(n_sites, np.eye(dim, dtype=complex) / dim)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_sites, self.entries.copy())

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def purity(self) -> float:
        return float(np.real(np.sum(self.entries * self.entries.T)))

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def check(self, psd_floor: float = PSD_EIG_FLOOR):
        """Validate Hermiticity, unit trace and the PSD eigenvalue floor."""
        h = np.abs(self.entries - self.entries.conj().T).max()
        if h > HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian: deviation {h:.2e}")
        t = abs(self.trace() - 1.0)
        if t > TRACE_TOL:
            raise ValueError(f"density matrix trace off by {t:.2e}")
        lo = float(np.linalg.eigvalsh(self.entries).min())
        if lo < psd_floor:
            raise ValueError(f"density matrix eigenvalue {lo:.2e} below floor")


def _apply_1q_rows(rho: np.ndarray, m: np.ndarray, bit: int, dim: int):
    view = rho.reshape(-1, 2, (1 << bit) * dim)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = m[0, 0] * a + m[0, 1] * b
    view[:, 1, :] = m[1, 0] * a + m[1, 1] * b


def _apply_1q_cols(rho: np.ndarray, m: np.ndarray, bit: int):
    mc = m.conj()
    view = rho.reshape(-1, 2, 1 << bit)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = mc[0, 0] * a + mc[0, 1] * b
    view[:, 1, :] = mc[1, 0] * a + mc[1, 1] * b


def _apply_1q_dm(rho: np.ndarray, m: np.ndarray, bit: int):
    _apply_1q_rows(rho, m, bit, rho.shape[0])
    _apply_1q_cols(rho, m, bit)


def _cnot_perm(n: int, c_bit: int, t_bit: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return idx ^ (((idx >> c_bit) & 1) << t_bit)


def _apply_gate_dm(rho: np.ndarray, gate: Gate, n: int):
    if gate.kind == "CNOT":
        perm = _cnot_perm(n, gate.sites[0] - 1, gate.sites[1] - 1)
        rho[:, :] = rho[np.ix_(perm, perm)]
    else:
        _apply_1q_dm(rho, gate.matrix_1q(), gate.sites[0] - 1)


@functools.lru_cache(maxsize=None)
def _site_superop(channel: KrausChannel) -> np.ndarray:
    """One-site channel as a (2,2,2,2) map on the (row, col) bit pair."""
    chi = np.zeros((2, 2, 2, 2), dtype=complex)  # [a, c, b, d]
    for op in channel.operators:
        chi += np.einsum("ab,cd->acbd", op, op.conj())
    return chi


def _apply_channel_dm(rho: np.ndarray, channel: KrausChannel, bit: int):
    dim = rho.shape[0]
    chi = _site_superop(channel)
    view = rho.reshape(-1, 2, dim // 2, 2, 1 << bit)
    view[:] = np.einsum("acbd,xbydz->xaycz", chi, view)


@dataclass(frozen=True)
class NoiseModel:
    """Where channels are inserted during evolution.

    ``after_one_qubit`` follows every one-qubit gate; ``after_two_qubit`` is
    a one-site channel applied independently to both sites of every CNOT;
    ``readout_flip`` is a classical per-site bit-flip probability applied to
    sampled outcomes.  ``None`` disables the corresponding insertion.
    """

    after_one_qubit: KrausChannel | None = None
    after_two_qubit: KrausChannel | None = None
    readout_flip: float | tuple | None = None

    def __post_init__(self):
        for ch in (self.after_one_qubit, self.after_two_qubit):
            if ch is not None and ch.arity != 1:
                raise ValueError("gate channels must act on one site")

    def flip_probs(self, n_sites: int) -> np.ndarray | None:
        if self.readout_flip is None:
            return None
        if np.isscalar(self.readout_flip):
            return np.full(n_sites, float(self.readout_flip))
        q = np.asarray(self.readout_flip, dtype=float)
        if q.shape != (n_sites,):
            raise ValueError("per-site flip probabilities must have length N")
        return q


IDEAL = NoiseModel()


def evolve_noisy(circuit: Circuit, init: DensityMatrix, noise: NoiseModel) -> DensityMatrix:
    """Gate-by-gate conjugation with one channel application per touched site."""
    if circuit.n_sites != init.n_sites:
        raise ValueError("circuit and state sizes differ")
    if circuit.n_sites > DM_MAX_SITES:
        raise BudgetError(f"density-matrix budget is N <= {DM_MAX_SITES}")
    rho = init.copy()
    for g in circuit.gates:
        _apply_gate_dm(rho.entries, g, rho.n_sites)
        if g.kind == "CNOT":
            if noise.after_two_qubit is not None:
                for s in g.sites:
                    _apply_channel_dm(rho.entries, noise.after_two_qubit, s - 1)
        elif noise.after_one_qubit is not None:
            _apply_channel_dm(rho.entries, noise.after_one_qubit, g.sites[0] - 1)
    return rho


# ---------------------------------------------------------------------------
# expectations and sampling
# ---------------------------------------------------------------------------


def walsh_transform(vec: np.ndarray) -> np.ndarray:
    """t[m] = sum_b (-1)^{popcount(b & m)} vec[b] via in-place butterflies."""
    t = vec.copy()
    n = len(t)
    h = 1
    while h < n:
        t = t.reshape(-1, 2, h)
        a = t[:, 0, :].copy()
        t[:, 0, :] = a + t[:, 1, :]
        t[:, 1, :] = a - t[:, 1, :]
        t = t.reshape(n)
        h *= 2
    return t


def _bulk_expectation(state, charge: PauliPolynomial, delta: float) -> complex:
    """Grouped evaluation: one gather and one Walsh transform per x_mask.

    For fixed flip mask x the term expectations are signed sums of the same
    overlap vector, i.e. Walsh-transform components indexed by z.
    """
    coeffs = charge.coefficients(delta) * charge.mask_arrays()[2]
    n = state.n_sites
    cols = np.arange(1 << n, dtype=np.int64)
    if isinstance(state, StateVector):
        left = state.amplitudes.conj()
        psi = state.amplitudes
    total = 0.0 + 0.0j
    for x, zs, idx in charge.x_groups():
        if isinstance(state, StateVector):
            overlap = left[cols ^ x] * psi
        else:
            overlap = state.entries[cols, cols ^ x]
        total += coeffs[idx] @ walsh_transform(overlap)[zs]
    return total


def exact_expectation(state, charge: PauliPolynomial, delta: float) -> float:
    """tr(rho Q) or <psi|Q|psi> with the charge evaluated at ``delta``."""
    if state.n_sites != charge.n_sites:
        raise ValueError("state and charge sizes differ")
    if len(charge) > 48:
        val = _bulk_expectation(state, charge, delta)
    elif isinstance(state, StateVector):
        val = sum(p(delta) * s.expectation_statevector(state.amplitudes) for s, p in charge.items())
    else:
        val = sum(p(delta) * s.expectation_density(state.entries) for s, p in charge.items())
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag:.2e}")
    return float(val.real)


def rotated_probabilities(state, word: str) -> np.ndarray:
    """Outcome distribution after appending the measurement rotation for ``word``."""
    gates = build_measurement_rotation(word)
    if isinstance(state, StateVector):
        tmp = state.copy()
        for g in gates:
            _apply_gate_sv(tmp.amplitudes, g, tmp.n_sites)
        return tmp.probabilities()
    tmp = state.copy()
    for g in gates:
        _apply_gate_dm(tmp.entries, g, tmp.n_sites)
    return tmp.probabilities()


def apply_readout_flips(probs: np.ndarray, flip: np.ndarray, n_sites: int) -> np.ndarray:
    """Push a distribution through independent per-site classical bit flips."""
    p = probs.copy()
    for j in range(n_sites):
        q = flip[j]
        if q == 0.0:
            continue
        swapped = p.reshape(-1, 2, 1 << j)[:, ::-1, :].reshape(p.shape)
        p = (1.0 - q) * p + q * swapped
    return p


def shot_rng(seed: int, word_index: int = 0, block: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, word index, shot block)."""
    return np.random.Generator(
        np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, (word_index << 20) ^ block])
    )


def sample(
    state,
    word: str | None,
    shots: int,
    seed: int,
    noise: NoiseModel = IDEAL,
    word_index: int = 0,
) -> dict:
    """Multinomial outcome counts in the word basis (or computational basis).

    Deterministic for a fixed (seed, word_index); counts sum to ``shots``;
    readout flips from ``noise`` are folded into the sampled distribution.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = rotated_probabilities(state, word) if word is not None else state.probabilities()
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    flips = noise.flip_probs(state.n_sites)
    if flips is not None:
        p = apply_readout_flips(p, flips, state.n_sites)
    rng = shot_rng(seed, word_index)
    draws = rng.multinomial(shots, p)
    n = state.n_sites
    return {bitstring(i, n): int(c) for i, c in enumerate(draws) if c}
