"""Kraus-operator noise channels.

Two channels are provided: single-qubit depolarizing and combined
amplitude-and-phase damping.  Every constructed channel is validated against
the CPTP completeness condition sum(D^dag D) = I to 1e-12; a violation is a
constructor error, never a silent state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COMPLETENESS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A CPTP map given by its Kraus operators (2x2 for one site, 4x4 for two).

    Instances hash by identity so engines can cache derived representations.
    """

    arity: int
    operators: tuple

    def __post_init__(self):
        dim = 2**self.arity
        if self.arity not in (1, 2):
            raise ValueError("channel arity must be 1 or 2")
        acc = np.zeros((dim, dim), dtype=complex)
        for op in self.operators:
            if op.shape != (dim, dim):
                raise ValueError(f"Kraus operator shape {op.shape} != ({dim},{dim})")
            acc += op.conj().T @ op
        if np.abs(acc - np.eye(dim)).max() > COMPLETENESS_TOL:
            raise ValueError("Kraus completeness violated beyond 1e-12")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Channel action on a density matrix of matching dimension."""
        out = np.zeros(rho.shape, dtype=complex)
        for op in self.operators:
            out += op @ rho @ op.conj().T
        return out


def depolarizing(p: float) -> KrausChannel:
    """Single-qubit depolarizing channel: (1-p) rho + p I/2 for unit trace."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing rate must be in [0, 1], got {p}")
    i = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return KrausChannel(
        1,
        (
            np.sqrt(1 - 3 * p / 4) * i,
            np.sqrt(p / 4) * x,
            np.sqrt(p / 4) * y,
            np.sqrt(p / 4) * z,
        ),
    )


def amp_phase_damping(lambda_a: float, lambda_p: float) -> KrausChannel:
    """Combined amplitude-and-phase damping with rates (lambda_a, lambda_p)."""
    if lambda_a < 0 or lambda_p < 0 or lambda_a + lambda_p > 1:
        raise ValueError("need lambda_a, lambda_p >= 0 and lambda_a + lambda_p <= 1")
    d1 = np.array([[1, 0], [0, np.sqrt(1 - lambda_a - lambda_p)]], dtype=complex)
    d2 = np.array([[0, np.sqrt(lambda_a)], [0, 0]], dtype=complex)
    d3 = np.array([[0, 0], [0, np.sqrt(lambda_p)]], dtype=complex)
    return KrausChannel(1, (d1, d2, d3))


def two_site(channel: KrausChannel) -> KrausChannel:
    """Tensor-product channel acting on a pair of sites."""
    if channel.arity != 1:
        raise ValueError("two_site expects a one-site channel")
    ops = tuple(
        np.kron(b, a) for a in channel.operators for b in channel.operators
    )
    return KrausChannel(2, ops)


def standard_damping_rates(lambda_a: float, lambda_p: float) -> tuple:
    """Convert (lambda_a, lambda_p) to the textbook (gamma, lambda) pair.

    The combined channel is the composition of amplitude damping with rate
    gamma = lambda_a and phase damping with rate lambda = lambda_p(1-lambda_a);
    useful for matching rates against other toolchains.
    """
    return lambda_a, lambda_p * (1.0 - lambda_a)
