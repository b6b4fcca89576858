"""Noise channels in PTM form.

Pauli channels are stored by their error distribution together with the PTM
diagonal ``W @ probs``; anything else is a :class:`GeneralChannel` holding a
dense PTM.  Pauli-only fast paths check ``isinstance(ch, PauliChannel)`` and
reject general channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import (
    MAX_QUBITS,
    PtmState,
    is_trace_preserving,
    num_qubits_from_dim,
    walsh_matrix,
)

PROB_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """``rho -> sum_i probs[i] S_i rho S_i`` with PTM ``diag(diag)``."""

    probs: np.ndarray
    diag: np.ndarray
    n: int

    @property
    def ptm(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def dim(self) -> int:
        return 4**self.n


@dataclass(frozen=True, eq=False)
class GeneralChannel:
    """Trace-preserving channel given by an arbitrary real PTM."""

    ptm: np.ndarray
    n: int

    def __post_init__(self):
        ptm = np.array(self.ptm, dtype=float)
        if ptm.shape != (4**self.n, 4**self.n):
            raise ValueError(f"PTM shape {ptm.shape} does not match n={self.n}")
        if not is_trace_preserving(ptm):
            raise ValueError("channel PTM is not trace preserving")
        ptm.setflags(write=False)
        object.__setattr__(self, "ptm", ptm)

    @property
    def dim(self) -> int:
        return 4**self.n


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def pauli_channel(probs) -> PauliChannel:
    """Build a Pauli channel from its error distribution."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1:
        raise ValueError("probs must be one-dimensional")
    n = num_qubits_from_dim(probs.size)
    if np.any(probs < 0):
        raise ValueError("Pauli error probabilities must be nonnegative")
    if abs(probs.sum() - 1) > PROB_ATOL:
        raise ValueError(f"Pauli error probabilities sum to {probs.sum()!r}, expected 1")
    diag = walsh_matrix(n) @ probs
    return PauliChannel(_readonly(probs), _readonly(diag), n)


def identity_channel(n: int = 1) -> PauliChannel:
    probs = np.zeros(4**n)
    probs[0] = 1.0
    return pauli_channel(probs)


def depolarizing(eps: float) -> PauliChannel:
    """Single-qubit depolarizing channel with gate error probability ``eps``.

    X, Y and Z errors each occur with probability ``eps/3``.
    """
    if not 0 <= eps < 0.75:
        raise ValueError(f"eps must lie in [0, 3/4), got {eps!r}")
    return pauli_channel([1 - eps, eps / 3, eps / 3, eps / 3])


def two_qubit_depolarizing(eps: float) -> PauliChannel:
    """Uniform over the 15 non-identity two-qubit Pauli errors."""
    if not 0 <= eps < 15 / 16:
        raise ValueError(f"eps must lie in [0, 15/16), got {eps!r}")
    probs = np.full(16, eps / 15)
    probs[0] = 1 - eps
    return pauli_channel(probs)


def amplitude_damping(gamma: float) -> GeneralChannel:
    """Single-qubit amplitude damping with damping probability ``gamma``."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")
    s = np.sqrt(1 - gamma)
    ptm = np.array(
        [[1, 0, 0, 0],
         [0, s, 0, 0],
         [0, 0, s, 0],
         [gamma, 0, 0, 1 - gamma]],
        dtype=float,
    )
    return GeneralChannel(ptm, 1)


def gate_error_probability(ch) -> float:
    """``1 - Tr(C) / 4**n``."""
    if isinstance(ch, PauliChannel):
        trace = float(np.sum(ch.diag))
    else:
        trace = float(np.trace(ch.ptm))
    return 1.0 - trace / 4**ch.n


def _embed(local: np.ndarray, qubit: int, n: int) -> np.ndarray:
    # qubit 0 is the rightmost Kronecker factor
    left = np.eye(4 ** (n - qubit - 1))
    right = np.eye(4**qubit)
    return np.kron(left, np.kron(local, right))


def lift_single_qubit(ch, qubit: int, n: int):
    """Embed a single-qubit channel acting on ``qubit`` of an n-qubit register."""
    if ch.n != 1:
        raise ValueError("only single-qubit channels can be lifted")
    if not 0 <= qubit < n or n > MAX_QUBITS:
        raise ValueError(f"qubit {qubit} out of range for n={n}")
    if isinstance(ch, PauliChannel):
        probs = np.zeros(4**n)
        for d in range(4):
            probs[d << (2 * qubit)] = ch.probs[d]
        return pauli_channel(probs)
    return GeneralChannel(_embed(ch.ptm, qubit, n), n)


def lift_two_qubit(ch, qubits: tuple[int, int], n: int) -> PauliChannel:
    """Embed a two-qubit Pauli channel on ``qubits = (a, b)``; digit 0 maps to ``a``."""
    if not isinstance(ch, PauliChannel) or ch.n != 2:
        raise ValueError("only two-qubit Pauli channels can be lifted")
    a, b = qubits
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise ValueError(f"invalid qubit pair {qubits} for n={n}")
    probs = np.zeros(4**n)
    for idx in range(16):
        probs[((idx & 3) << (2 * a)) | ((idx >> 2) << (2 * b))] = ch.probs[idx]
    return pauli_channel(probs)


def compose(*channels):
    """Channel applying ``channels[0]`` first, then ``channels[1]``, ..."""
    if not channels:
        raise ValueError("need at least one channel")
    n = channels[0].n
    if any(c.n != n for c in channels):
        raise ValueError("channels act on different qubit counts")
    if all(isinstance(c, PauliChannel) for c in channels):
        diag = np.prod([c.diag for c in channels], axis=0)
        probs = walsh_matrix(n) @ diag / 4**n
        probs = np.clip(probs, 0.0, None)
        return pauli_channel(probs / probs.sum())
    ptm = np.eye(4**n)
    for c in channels:
        ptm = c.ptm @ ptm
    return GeneralChannel(ptm, n)


def apply_noisy_gate(ch, gate, state: PtmState) -> PtmState:
    """Return ``C G v``."""
    gate = np.asarray(gate, dtype=float)
    d = state.coeffs.size
    if gate.shape != (d, d) or (ch is not None and ch.dim != d):
        raise ValueError("dimension mismatch between channel, gate and state")
    v = gate @ state.coeffs
    if ch is None:
        pass
    elif isinstance(ch, PauliChannel):
        v = ch.diag * v
    else:
        v = ch.ptm @ v
    return PtmState(v, state.n)
