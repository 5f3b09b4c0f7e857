"""Pauli-basis quantum state tomography.

The full basis of 3^N words is measured (or evaluated exactly); linear
inversion pools, for every Pauli operator, all the bases that measure it,
since the word basis is over-complete.  The linear-inversion matrix can have
small negative eigenvalues at finite shots; the positive projection is the
closest density matrix in Frobenius norm, obtained by projecting the
spectrum onto the probability simplex while keeping eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np

from .pauli import PauliString
from .sim import DensityMatrix, rotated_probabilities, shot_rng, walsh_transform

TOMO_MAX_SITES = 6


def all_words(n_sites: int):
    """The 3^N Pauli words in lexicographic order."""
    return ["".join(w) for w in iproduct("XYZ", repeat=n_sites)]


@dataclass
class TomographyData:
    """Per-basis outcome frequencies.

    ``freqs`` has one row per word (ordered as :func:`all_words`) holding
    outcome counts; ``shots`` is the common per-basis shot count, or None in
    exact-probability mode where rows are exact distributions.
    """

    n_sites: int
    freqs: np.ndarray
    shots: int | None

    def __post_init__(self):
        expect = (3**self.n_sites, 1 << self.n_sites)
        if self.freqs.shape != expect:
            raise ValueError(f"frequency table must have shape {expect}")
        target = 1.0 if self.shots is None else float(self.shots)
        sums = self.freqs.sum(axis=1)
        if np.abs(sums - target).max() > 1e-9:
            raise ValueError("per-basis counts do not sum to the shot count")


def collect(state, shots: int | None, seed: int = 0) -> TomographyData:
    """Measure all 3^N bases of ``state``; ``shots=None`` stores exact distributions."""
    n = state.n_sites
    if n > TOMO_MAX_SITES:
        raise ValueError(f"tomography budget is N <= {TOMO_MAX_SITES}")
    words = all_words(n)
    rows = np.empty((len(words), 1 << n))
    for k, w in enumerate(words):
        p = rotated_probabilities(state, w)
        if shots is None:
            rows[k] = p
        else:
            rows[k] = shot_rng(seed, k).multinomial(shots, np.clip(p, 0, None) / p.sum())
    return TomographyData(n, rows, shots)


def linear_inversion(data: TomographyData) -> np.ndarray:
    """Hermitian unit-trace reconstruction rho* = 2^-N sum_P m_P P.

    Every Pauli expectation is pooled over the 3^(number of identity sites)
    bases that measure it; the result needs no clipping and may be non-PSD.
    """
    n = data.n_sites
    dim = 1 << n
    words = all_words(n)
    shots = 1.0 if data.shots is None else float(data.shots)

    sums: dict = {}
    hits: dict = {}
    for k, w in enumerate(words):
        t = walsh_transform(data.freqs[k] / shots)
        for mask in range(dim):
            letters = "".join(w[j] if (mask >> j) & 1 else "I" for j in range(n))
            sums[letters] = sums.get(letters, 0.0) + t[mask]
            hits[letters] = hits.get(letters, 0) + 1

    rho = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for letters, total in sums.items():
        m_p = total / hits[letters]
        if letters == "I" * n:
            rho[cols, cols] += m_p  # trace component is exactly 1 by construction
            continue
        rows, vals = PauliString.from_letters(letters).column_action()
        rho[rows, cols] += m_p * vals
    return rho / dim


def simplex_project(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(values, dtype=float)
    srt = np.sort(v)[::-1]
    css = np.cumsum(srt) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.max(np.where(srt - css / idx > 0)[0]) + 1
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def psd_project(hermitian: np.ndarray, n_sites: int | None = None) -> DensityMatrix:
    """Closest density matrix in Frobenius norm to a Hermitian unit-trace input.

    Eigenvalues are projected onto the simplex (truncation plus uniform
    redistribution); eigenvectors are kept.
    """
    if np.abs(hermitian - hermitian.conj().T).max() > 1e-9:
        raise ValueError("input must be Hermitian")
    if abs(np.trace(hermitian).real - 1.0) > 1e-9:
        raise ValueError("input must have unit trace")
    vals, vecs = np.linalg.eigh(hermitian)
    fixed = simplex_project(vals)
    rho = (vecs * fixed) @ vecs.conj().T
    if n_sites is None:
        n_sites = int(np.log2(hermitian.shape[0]))
    out = DensityMatrix(n_sites, rho)
    out.check()
    return out


def _sqrt_psd(entries: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(entries)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """State fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1].

    Evaluated as the squared nuclear norm of sqrt(sigma) sqrt(rho), which is
    the same quantity and symmetric under exchange by construction.
    """
    if rho.n_sites != sigma.n_sites:
        raise ValueError("state sizes differ")
    rho.check()
    sigma.check()
    singular = np.linalg.svd(_sqrt_psd(sigma.entries) @ _sqrt_psd(rho.entries), compute_uv=False)
    f = float(np.sum(singular) ** 2)
    return min(max(f, 0.0), 1.0)


def reconstruct(state, shots: int | None, seed: int = 0) -> DensityMatrix:
    """collect -> linear inversion -> positive projection."""
    return psd_project(linear_inversion(collect(state, shots, seed)), state.n_sites)
