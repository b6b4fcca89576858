"""Quasi-probability decompositions of inverse channels and their sampling.

An inverse channel is written as ``sum_l alpha[l] O_l`` over implementable
operations ``O_l``.  Sampling index ``l`` with probability
``|alpha[l]| / ||alpha||_1`` and weighting by ``sign(alpha[l]) ||alpha||_1``
gives an unbiased estimator; a finite number of draws leaves a random
residual channel whose statistics are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channels import GeneralChannel, PauliChannel
from .pauli import is_trace_preserving, kraus_to_ptm, walsh_matrix

#: Largest value ``total_overhead_exact`` will return.
MAX_OVERHEAD = 2**62


@dataclass(frozen=True, eq=False)
class QuasiProbDecomposition:
    """Signed decomposition of an inverse channel.

    For Pauli decompositions ``ops`` holds the PTM diagonals of the Pauli
    gates, shape ``(L, D)``; otherwise it holds full PTMs, shape ``(L, D, D)``.
    """

    alpha: np.ndarray
    sampling_probs: np.ndarray
    signs: np.ndarray
    norm1: float
    ops: np.ndarray
    n: int
    diagonal: bool

    @property
    def size(self) -> int:
        return self.alpha.size

    @property
    def dim(self) -> int:
        return 4**self.n

    def operator(self, index: int) -> np.ndarray:
        op = self.ops[index]
        return np.diag(op) if self.diagonal else op

    @property
    def basis(self) -> list[np.ndarray]:
        return [self.operator(i) for i in range(self.size)]

    @cached_property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.sampling_probs > 0)

    @cached_property
    def trace_preserving(self) -> bool:
        if self.diagonal:
            return True
        return all(is_trace_preserving(op, atol=1e-9) for op in self.ops)

    def combine(self, weights) -> np.ndarray:
        """``sum_l weights[l] O_l`` as a dense PTM."""
        if self.diagonal:
            return np.diag(np.asarray(weights) @ self.ops)
        return np.tensordot(weights, self.ops, axes=1)

    def reconstruct(self) -> np.ndarray:
        return self.combine(self.alpha)


@dataclass(frozen=True, eq=False)
class EmpiricalDecomposition:
    """Finite-draw estimate of a decomposition's sampling distribution."""

    counts: np.ndarray
    freq: np.ndarray
    alpha_tilde: np.ndarray
    draws: int


def _from_alpha(alpha, ops, n, diagonal) -> QuasiProbDecomposition:
    alpha = np.asarray(alpha, dtype=float)
    norm1 = float(np.sum(np.abs(alpha)))
    probs = np.abs(alpha) / norm1
    signs = np.where(alpha < 0, -1.0, 1.0)
    for a in (alpha, probs, signs, ops):
        a.setflags(write=False)
    return QuasiProbDecomposition(alpha, probs, signs, norm1, ops, n, diagonal)


def invert_pauli(ch: PauliChannel) -> QuasiProbDecomposition:
    """Decompose the inverse of a Pauli channel over the Pauli gates.

    ``alpha = W (1 / diag) / 4**n``; the l-th operation is the Pauli gate
    ``S_l`` whose PTM diagonal is column ``l`` of the Walsh matrix.
    """
    if not isinstance(ch, PauliChannel):
        raise TypeError("invert_pauli needs a PauliChannel; use invert_general instead")
    if np.min(np.abs(ch.diag)) < 1e-12:
        raise ValueError("Pauli channel is not invertible (zero PTM eigenvalue)")
    w = walsh_matrix(ch.n)
    alpha = w @ (1.0 / ch.diag) / 4**ch.n
    # drop pure roundoff so that untouched Pauli gates are never sampled
    alpha[np.abs(alpha) < 1e-15 * np.max(np.abs(alpha))] = 0.0
    return _from_alpha(alpha, np.array(w), ch.n, True)


def invert_general(ch, basis, allow_partial: bool = False) -> QuasiProbDecomposition:
    """Solve ``sum_l alpha[l] O_l = C^-1`` over an operation basis.

    The basis must span the full PTM space unless ``allow_partial`` is set, in
    which case it only has to contain the inverse in its span and the
    minimum-norm least-squares solution is returned.
    """
    target_ptm = ch.ptm if isinstance(ch, (GeneralChannel, PauliChannel)) else np.asarray(ch)
    ops = np.array([np.asarray(b, dtype=float) for b in basis])
    d = target_ptm.shape[0]
    if ops.ndim != 3 or ops.shape[1:] != (d, d):
        raise ValueError("basis operations must be PTMs matching the channel dimension")
    if np.linalg.cond(target_ptm) > 1e12:
        raise ValueError("channel PTM is singular")
    inverse = np.linalg.inv(target_ptm)
    stacked = ops.reshape(len(ops), -1).T
    rank = np.linalg.matrix_rank(stacked)
    if rank < d * d and not allow_partial:
        raise ValueError(f"basis spans only {rank} of {d * d} dimensions")
    alpha, *_ = np.linalg.lstsq(stacked, inverse.reshape(-1), rcond=None)
    if np.max(np.abs(stacked @ alpha - inverse.reshape(-1))) > 1e-9:
        raise ValueError(f"inverse channel is outside the span of the basis (rank {rank})")
    alpha[np.abs(alpha) < 1e-15] = 0.0
    n = int(round(math.log(d, 4)))
    return _from_alpha(alpha, ops, n, False)


def _rotation(axis_op):
    return (np.eye(2) + 1j * axis_op) / np.sqrt(2)


def default_single_qubit_basis() -> list[np.ndarray]:
    """Sixteen single-qubit operations spanning the PTM space.

    Pauli gates, pi/2 rotations about X, Y, Z, pi rotations about the
    YZ, ZX and XY diagonals, the three +1 eigenprojectors and the three
    rank-one maps ``(S_a + i S_b)/2``.  The identity comes first.
    """
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    i2 = np.eye(2, dtype=complex)
    kraus = [
        i2, x, y, z,
        _rotation(x), _rotation(y), _rotation(z),
        (y + z) / np.sqrt(2), (z + x) / np.sqrt(2), (x + y) / np.sqrt(2),
        (i2 + x) / 2, (i2 + y) / 2, (i2 + z) / 2,
        (y + 1j * z) / 2, (z + 1j * x) / 2, (x + 1j * y) / 2,
    ]
    basis = [kraus_to_ptm([k]) for k in kraus]
    rank = np.linalg.matrix_rank(np.array(basis).reshape(16, -1))
    if rank != 16:
        raise RuntimeError(f"default basis has rank {rank}, expected 16")
    return basis


def decompose(ch, basis=None) -> QuasiProbDecomposition:
    """Pauli decomposition for Pauli channels, general solve otherwise."""
    if isinstance(ch, PauliChannel) and basis is None:
        return invert_pauli(ch)
    if basis is None:
        if ch.n != 1:
            raise ValueError("no default basis for multi-qubit general channels")
        basis = default_single_qubit_basis()
    return invert_general(ch, basis)


def sampling_overhead_factor(d: QuasiProbDecomposition) -> float:
    """``||alpha||_1 ** 2``."""
    return d.norm1**2


def total_overhead_exact(n0: int, decomps) -> int:
    """Extra executions ``N0 (prod ||alpha_k||_1^2 - 1)`` rounded to nearest."""
    if n0 < 1:
        raise ValueError("N0 must be at least 1")
    log_factor = sum(2.0 * math.log(d.norm1) for d in decomps)
    value = n0 * math.expm1(log_factor)
    if not value < MAX_OVERHEAD:
        raise OverflowError("sampling overhead exceeds the representable cap")
    return int(math.floor(value + 0.5))


def draw_count(d: QuasiProbDecomposition, n_samples) -> int | None:
    """Draws used for one gate: ``round(Ns * ||alpha||_1**2)``, at least 1.

    ``n_samples=inf`` means exact inversion and returns ``None``.
    """
    if n_samples is None or math.isinf(n_samples):
        return None
    if n_samples < 1:
        raise ValueError("Ns must be at least 1")
    return max(1, int(math.floor(n_samples * d.norm1**2 + 0.5)))


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def draw_empirical(d: QuasiProbDecomposition, n_samples, rng) -> EmpiricalDecomposition:
    """Multinomial draw of the operation frequencies for one gate."""
    draws = draw_count(d, n_samples)
    if draws is None:
        raise ValueError("draw_empirical needs a finite Ns")
    counts = np.zeros(d.size, dtype=np.int64)
    supp = d.support
    counts[supp] = _rng(rng).multinomial(draws, d.sampling_probs[supp])
    freq = counts / draws
    return EmpiricalDecomposition(counts, freq, d.norm1 * d.signs * freq, draws)


def _check_pauli_pair(d: QuasiProbDecomposition, ch: PauliChannel):
    if not isinstance(ch, PauliChannel) or not d.diagonal:
        raise TypeError("Pauli residual statistics need a Pauli channel and decomposition")
    if d.n != ch.n or not np.allclose(d.alpha @ d.ops * ch.diag, 1.0, rtol=0, atol=1e-9):
        raise ValueError("decomposition does not invert this channel")


def residual_channel_pauli(d, emp: EmpiricalDecomposition, ch: PauliChannel) -> np.ndarray:
    """PTM diagonal of ``Gamma_tilde C``."""
    _check_pauli_pair(d, ch)
    return (emp.alpha_tilde @ d.ops) * ch.diag


def residual_covariance(d, ch: PauliChannel, n_samples) -> np.ndarray:
    """Covariance of the residual channel diagonal.

    With ``N`` draws, ``Cov(alpha_tilde) = ||alpha||_1^2 / N (P - q q^T)``
    where ``q = sign(alpha) * p = alpha / ||alpha||_1``, hence

        Xi = (||alpha||_1^2 (W P W) * c c^T - 1 1^T) / N.
    """
    _check_pauli_pair(d, ch)
    draws = draw_count(d, n_samples)
    dim = d.dim
    if draws is None:
        return np.zeros((dim, dim))
    supp = d.support
    w = d.ops[supp]
    wpw = (w.T * d.sampling_probs[supp]) @ w
    c = ch.diag
    xi = (d.norm1**2 * wpw * np.outer(c, c) - 1.0) / draws
    return 0.5 * (xi + xi.T)


def alpha_second_moment(d: QuasiProbDecomposition, n_samples) -> tuple[float, float]:
    """Coefficients ``(a, b)`` with ``E[alpha_tilde alpha_tilde^T] = a alpha alpha^T + b P``."""
    draws = draw_count(d, n_samples)
    if draws is None or d.support.size == 1:
        # a single reachable operation makes every draw identical
        return 1.0, 0.0
    return 1.0 - 1.0 / draws, d.norm1**2 / draws
