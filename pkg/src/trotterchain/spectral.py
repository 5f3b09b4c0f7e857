"""One-step quantum channel as a superoperator; spectra, fixed point, decay rate.

Row-major vectorization throughout: ``|rho> = sum rho_{ab} |a> (x) |b>``,
i.e. ``rho.reshape(-1)`` for C-ordered arrays.  A unitary gate U becomes
``U (x) U*``; a one-site channel becomes ``sum_k (K_k (x) Id) (x) (K_k (x) Id)*``.
Factors multiply in circuit order, so the full step mirrors the noisy
density-matrix engine exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, gate_unitary
from .noise import KrausChannel
from .sim import DensityMatrix, NoiseModel

SUPEROP_MAX_SITES = 4
UNIT_EIGENVALUE_TOL = 1e-8


class DegenerateFixedPointError(RuntimeError):
    """The channel has multiple steady states; no fixed point is singled out."""


@dataclass
class SuperOperator:
    n_sites: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.reshape(-1)).reshape(rho.shape)


def _site_kraus_factor(channel: KrausChannel, site: int, n_sites: int) -> np.ndarray:
    """Vectorized one-site channel embedded on the full register."""
    dim = 1 << n_sites
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for op in channel.operators:
        emb = np.eye(1, dtype=complex)
        for k in range(n_sites, 0, -1):
            emb = np.kron(emb, op if k == site else np.eye(2, dtype=complex))
        out += np.kron(emb, emb.conj())
    return out


def vectorize_step(circuit: Circuit, noise: NoiseModel) -> SuperOperator:
    """Superoperator of one noisy step (all circuit gates, channels included)."""
    n = circuit.n_sites
    if n > SUPEROP_MAX_SITES:
        raise ValueError(f"dense superoperator budget is N <= {SUPEROP_MAX_SITES}")
    dim = 1 << n
    total = np.eye(dim * dim, dtype=complex)
    for g in circuit.gates:
        u = gate_unitary(g, n)
        total = np.kron(u, u.conj()) @ total
        if g.kind == "CNOT":
            if noise.after_two_qubit is not None:
                for s in g.sites:
                    total = _site_kraus_factor(noise.after_two_qubit, s, n) @ total
        elif noise.after_one_qubit is not None:
            total = _site_kraus_factor(noise.after_one_qubit, g.sites[0], n) @ total
    return SuperOperator(n, total)


def spectrum(op: SuperOperator) -> np.ndarray:
    """All eigenvalues, sorted by descending modulus."""
    vals = np.linalg.eigvals(op.matrix)
    return vals[np.argsort(-np.abs(vals))]


def fixed_point(op: SuperOperator) -> DensityMatrix:
    """The unique eigenvector at eigenvalue 1, as a density matrix."""
    vals, vecs = np.linalg.eig(op.matrix)
    at_one = np.where(np.abs(vals - 1.0) < UNIT_EIGENVALUE_TOL)[0]
    if len(at_one) == 0:
        raise ValueError("no eigenvalue within tolerance of 1")
    if len(at_one) > 1:
        raise DegenerateFixedPointError(
            f"multiple steady states: {len(at_one)} eigenvalues within "
            f"{UNIT_EIGENVALUE_TOL} of 1"
        )
    dim = 1 << op.n_sites
    rho = vecs[:, at_one[0]].reshape(dim, dim)
    rho = (rho + rho.conj().T) / 2.0
    rho /= np.trace(rho).real
    out = DensityMatrix(op.n_sites, rho)
    out.check()
    return out


def decay_rate(op: SuperOperator) -> float | None:
    """-ln of the largest eigenvalue modulus strictly below 1.

    Returns None for a noiseless (unitary) step, where no eigenvalue sits
    strictly inside the unit circle.
    """
    mods = np.abs(spectrum(op))
    inside = mods[mods < 1.0 - UNIT_EIGENVALUE_TOL]
    if len(inside) == 0:
        return None
    return float(-np.log(inside.max()))


def subleading_modulus(op: SuperOperator) -> float | None:
    mods = np.abs(spectrum(op))
    inside = mods[mods < 1.0 - UNIT_EIGENVALUE_TOL]
    return float(inside.max()) if len(inside) else None


def estimate_subleading_modulus(
    circuit: Circuit, noise: NoiseModel, iterations: int = 60, seed: int = 0
) -> float:
    """Approximate |lambda_1| by iterated channel action, for N beyond the
    dense-superoperator budget.

    Powers the step map on a random traceless Hermitian deviation and reads
    the asymptotic norm ratio.  This is a power-iteration estimate: it sees
    the dominant decaying mode reachable from the start deviation and is
    accurate only to the extent the tail ratios have settled.
    """
    from .sim import evolve_noisy  # local import: sim already imports noise

    n = circuit.n_sites
    dim = 1 << n
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    dev = (a + a.conj().T) / 2.0
    dev -= np.trace(dev).real * np.eye(dim) / dim
    dev /= np.linalg.norm(dev)
    ratios = []
    for _ in range(iterations):
        out = evolve_noisy(circuit, DensityMatrix(n, dev), noise).entries
        # re-project Hermiticity and tracelessness: roundoff leakage into the
        # unit-eigenvalue mode would otherwise grow by 1/|lambda_1| per step
        out = (out + out.conj().T) / 2.0
        out -= np.trace(out).real * np.eye(dim) / dim
        norm = np.linalg.norm(out)
        ratios.append(norm)
        if norm < 1e-300:
            break
        dev = out / norm
    tail = ratios[-10:]
    return float(np.mean(tail))


def spectrum_csv_rows(vals: np.ndarray):
    """(Re, Im) pairs for plotting eigenvalue clouds."""
    return [(float(v.real), float(v.imag)) for v in vals]
