"""Pauli-basis bookkeeping and Pauli transfer matrix (PTM) conversions.

Pauli strings on ``n`` qubits are indexed by an integer in ``[0, 4**n)`` whose
base-4 digits, least significant first, give the single-qubit factor of qubit
0, 1, ... with the encoding ``0=I, 1=X, 2=Y, 3=Z``.  The matrix of a Pauli
string is the Kronecker product with qubit 0 as the *rightmost* factor, so the
same little-endian convention holds for computational basis states.

States are real coefficient vectors ``v[i] = Tr(S_i rho) / sqrt(2**n)`` and
maps are real matrices ``T[i, j] = Tr(S_i O(S_j)) / 2**n``.  Observables use
the same normalisation as states, so ``Tr(M rho) == obs.coeffs @ state.coeffs``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

#: Largest qubit count for which dense 4**n x 4**n matrices are built.
MAX_QUBITS = 6

#: Absolute tolerance for Hermiticity, unitarity and imaginary-residue checks.
ATOL = 1e-10

PAULI_LABELS = "IXYZ"

_SINGLE = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

_WALSH_1 = np.array(
    [[1, 1, 1, 1],
     [1, 1, -1, -1],
     [1, -1, 1, -1],
     [1, -1, -1, 1]],
    dtype=float,
)


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"qubit count must be a positive integer, got {n!r}")
    if n > MAX_QUBITS:
        raise ValueError(f"n={n} exceeds the dense-PTM cap of {MAX_QUBITS} qubits")


def num_qubits_from_dim(dim: int, base: int = 4) -> int:
    n = 0
    d = 1
    while d < dim:
        d *= base
        n += 1
    if d != dim or n == 0:
        raise ValueError(f"dimension {dim} is not a positive power of {base}")
    return n


def pauli_digits(index: int, n: int) -> tuple[int, ...]:
    """Per-qubit digits of a Pauli index, qubit 0 first."""
    _check_n(n)
    if not 0 <= index < 4**n:
        raise ValueError(f"Pauli index {index} out of range for n={n}")
    return tuple((index >> (2 * q)) & 3 for q in range(n))


def pauli_index(digits) -> int:
    """Inverse of :func:`pauli_digits`."""
    index = 0
    for q, d in enumerate(digits):
        if d not in (0, 1, 2, 3):
            raise ValueError(f"invalid Pauli digit {d!r}")
        index |= d << (2 * q)
    return index


def pauli_label(index: int, n: int) -> str:
    """Human-readable label with qubit ``n-1`` on the left, e.g. ``'ZI'``."""
    return "".join(PAULI_LABELS[d] for d in reversed(pauli_digits(index, n)))


def pauli_matrix(index: int, n: int) -> np.ndarray:
    """Matrix of the Pauli string with the given index."""
    digits = pauli_digits(index, n)
    out = np.ones((1, 1), dtype=complex)
    for d in reversed(digits):
        out = np.kron(out, _SINGLE[d])
    return out


@lru_cache(maxsize=None)
def _pauli_stack(n: int) -> np.ndarray:
    _check_n(n)
    stack = np.array([pauli_matrix(i, n) for i in range(4**n)])
    stack.setflags(write=False)
    return stack


@lru_cache(maxsize=None)
def _pauli_columns(n: int) -> np.ndarray:
    # columns are row-major vec(S_j)
    cols = _pauli_stack(n).reshape(4**n, -1).T.copy()
    cols.setflags(write=False)
    return cols


@lru_cache(maxsize=None)
def walsh_matrix(n: int) -> np.ndarray:
    """Commutation sign matrix of the n-qubit Pauli group.

    Entry ``(i, j)`` is +1 when ``S_i`` and ``S_j`` commute and -1 otherwise.
    It is the n-fold Kronecker power of the single-qubit table and satisfies
    ``W @ W == 4**n * I``.  The returned array is read-only and cached.
    """
    _check_n(n)
    w = np.ones((1, 1))
    for _ in range(n):
        w = np.kron(_WALSH_1, w)
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class PtmState:
    """Density matrix in the normalised Pauli basis."""

    coeffs: np.ndarray
    n: int

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (4**self.n,):
            raise ValueError(f"expected {4**self.n} coefficients, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def purity(self) -> float:
        """``Tr(rho**2)``, equal to the squared norm of the coefficients."""
        return float(self.coeffs @ self.coeffs)

    def is_valid(self, atol: float = 1e-9) -> bool:
        trace_ok = abs(self.coeffs[0] - 2.0 ** (-self.n / 2)) <= atol
        return trace_ok and self.purity <= 1 + atol


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian observable in the same normalised Pauli basis as states."""

    coeffs: np.ndarray
    n: int

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (4**self.n,):
            raise ValueError(f"expected {4**self.n} coefficients, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def zero_bias(self) -> bool:
        return abs(self.coeffs[0]) <= 1e-12

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def to_matrix(self) -> np.ndarray:
        """Reassemble the operator ``sum_i coeffs[i] S_i / sqrt(2**n)``."""
        stack = _pauli_stack(self.n)
        return np.tensordot(self.coeffs, stack, axes=1) * 2.0 ** (-self.n / 2)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.to_matrix()))))


def _as_square(mat, name) -> tuple[np.ndarray, int]:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {mat.shape}")
    n = num_qubits_from_dim(mat.shape[0], base=2)
    _check_n(n)
    return mat, n


def _pauli_components(mat: np.ndarray, n: int) -> np.ndarray:
    # Tr(S_i A) for every i; S_i Hermitian so Tr(S_i A) = conj(vec S_i) . vec A
    comps = _pauli_columns(n).conj().T @ mat.reshape(-1)
    if np.max(np.abs(comps.imag), initial=0.0) > ATOL * 2**n:
        raise ValueError("matrix is not Hermitian: Pauli components have imaginary parts")
    return comps.real


def unitary_to_ptm(u) -> np.ndarray:
    """PTM ``T[i, j] = Tr(S_i U S_j U^dag) / 2**n`` of a unitary gate."""
    u, n = _as_square(u, "unitary")
    d = 2**n
    if not np.allclose(u @ u.conj().T, np.eye(d), rtol=0, atol=ATOL):
        raise ValueError("matrix is not unitary within tolerance")
    cols = _pauli_columns(n)
    # row-major vec(U X U^dag) = (U kron conj(U)) vec(X)
    ptm = cols.conj().T @ (np.kron(u, u.conj()) @ cols) / d
    if np.max(np.abs(ptm.imag)) > ATOL:
        raise ValueError("PTM has non-negligible imaginary part")
    return np.ascontiguousarray(ptm.real)


def kraus_to_ptm(kraus_ops) -> np.ndarray:
    """PTM of the map ``rho -> sum_k K rho K^dag`` (no completeness check)."""
    kraus_ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
    _, n = _as_square(kraus_ops[0], "Kraus operator")
    d = 2**n
    cols = _pauli_columns(n)
    sup = sum(np.kron(k, k.conj()) for k in kraus_ops)
    ptm = cols.conj().T @ (sup @ cols) / d
    if np.max(np.abs(ptm.imag)) > ATOL:
        raise ValueError("PTM has non-negligible imaginary part")
    return np.ascontiguousarray(ptm.real)


def density_to_ptm(rho) -> PtmState:
    """Coefficients ``Tr(S_i rho) / sqrt(2**n)`` of a density matrix."""
    rho, n = _as_square(rho, "density matrix")
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=ATOL):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > ATOL:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.3g}, expected 1")
    if np.min(np.linalg.eigvalsh(rho)) < -ATOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return PtmState(_pauli_components(rho, n) * 2.0 ** (-n / 2), n)


def observable_to_ptm(m, strict: bool = False) -> Observable:
    """Coefficients ``Tr(S_i M) / sqrt(2**n)`` of a Hermitian observable.

    With ``strict=True`` the eigenvalues must lie in ``[-1, 1]``.
    """
    m, n = _as_square(m, "observable")
    if not np.allclose(m, m.conj().T, rtol=0, atol=ATOL):
        raise ValueError("observable is not Hermitian")
    if strict and np.max(np.abs(np.linalg.eigvalsh(m))) > 1 + ATOL:
        raise ValueError("observable has eigenvalues outside [-1, 1]")
    return Observable(_pauli_components(m, n) * 2.0 ** (-n / 2), n)


def expectation(obs: Observable, state: PtmState) -> float:
    """``Tr(M rho)`` from the two coefficient vectors."""
    if obs.n != state.n:
        raise ValueError(f"observable acts on {obs.n} qubits, state on {state.n}")
    return float(obs.coeffs @ state.coeffs)


def zero_state(n: int) -> PtmState:
    """The all-zero computational basis state."""
    _check_n(n)
    coeffs = np.zeros(4**n)
    # |0><0| = prod (I + Z)/2, so every I/Z string appears with weight 2**-n
    for idx in range(2**n):
        digits = [3 if (idx >> q) & 1 else 0 for q in range(n)]
        coeffs[pauli_index(digits)] = 2.0 ** (-n / 2)
    return PtmState(coeffs, n)


def plus_state(n: int) -> PtmState:
    """The product state ``|+>^n``."""
    _check_n(n)
    coeffs = np.zeros(4**n)
    for idx in range(2**n):
        digits = [1 if (idx >> q) & 1 else 0 for q in range(n)]
        coeffs[pauli_index(digits)] = 2.0 ** (-n / 2)
    return PtmState(coeffs, n)


def pauli_observable(index: int, n: int) -> Observable:
    """Observable equal to a single Pauli string."""
    coeffs = np.zeros(4**n)
    coeffs[index] = 2.0 ** (n / 2)
    return Observable(coeffs, n)


def is_trace_preserving(ptm, atol: float = 1e-12) -> bool:
    ptm = np.asarray(ptm)
    e0 = np.zeros(ptm.shape[1])
    e0[0] = 1.0
    return bool(np.allclose(ptm[0], e0, rtol=0, atol=atol))


def is_unitary_ptm(ptm, atol: float = 1e-9) -> bool:
    """Trace preserving, unital and orthogonal."""
    ptm = np.asarray(ptm)
    if not is_trace_preserving(ptm, atol) or np.any(np.abs(ptm[1:, 0]) > atol):
        return False
    return bool(np.allclose(ptm.T @ ptm, np.eye(ptm.shape[0]), rtol=0, atol=atol))


def _single_product_phases() -> np.ndarray:
    # sigma_a sigma_b = phase[a, b] * sigma_(a ^ b)
    phase = np.empty((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            prod = _SINGLE[a] @ _SINGLE[b]
            ref = _SINGLE[a ^ b]
            phase[a, b] = np.trace(ref.conj().T @ prod) / 2
    return phase


_PRODUCT_PHASES = _single_product_phases()


def pauli_product(i: int, j: int, n: int) -> tuple[complex, int]:
    """``S_i S_j = phase * S_k``; returns ``(phase, k)``."""
    phase = 1.0 + 0j
    for a, b in zip(pauli_digits(i, n), pauli_digits(j, n)):
        phase *= _PRODUCT_PHASES[a, b]
    return phase, i ^ j


def pauli_rotation_ptm(index: int, theta: float, n: int) -> np.ndarray:
    """PTM of ``exp(-i theta S_index)`` without forming the unitary.

    Commuting Pauli strings are fixed; an anticommuting ``S_j`` maps to
    ``cos(2 theta) S_j - i sin(2 theta) S S_j``.
    """
    w = walsh_matrix(n)
    d = 4**n
    ptm = np.eye(d)
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    for j in np.flatnonzero(w[index] < 0):
        phase, k = pauli_product(index, int(j), n)
        coef = -1j * s * phase
        ptm[j, j] = c
        ptm[k, j] = coef.real
    return ptm
