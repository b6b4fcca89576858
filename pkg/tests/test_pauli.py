from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_density, random_hermitian, random_unitary
from qemlab.pauli import (
    MAX_QUBITS,
    PtmState,
    density_to_ptm,
    expectation,
    is_trace_preserving,
    is_unitary_ptm,
    kraus_to_ptm,
    observable_to_ptm,
    pauli_digits,
    pauli_index,
    pauli_label,
    pauli_matrix,
    pauli_observable,
    pauli_product,
    pauli_rotation_ptm,
    plus_state,
    unitary_to_ptm,
    walsh_matrix,
    zero_state,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
S2 = np.sqrt(2)


def brute_walsh(n):
    mats = [pauli_matrix(i, n) for i in range(4**n)]
    d = 4**n
    w = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            w[i, j] = 1 if np.allclose(mats[i] @ mats[j], mats[j] @ mats[i]) else -1
    return w


class TestIndexing:
    def test_digits_round_trip(self):
        for n in (1, 2, 3):
            for idx in range(4**n):
                assert pauli_index(pauli_digits(idx, n)) == idx

    def test_little_endian_labels(self):
        assert pauli_label(1, 2) == "IX"
        assert pauli_label(4, 2) == "XI"
        assert pauli_label(3 + 3 * 4, 2) == "ZZ"

    def test_qubit_zero_is_rightmost_factor(self):
        assert np.allclose(pauli_matrix(1, 2), np.kron(np.eye(2), X))
        assert np.allclose(pauli_matrix(3 * 4, 2), np.kron(Z, np.eye(2)))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            pauli_digits(16, 2)
        with pytest.raises(ValueError):
            pauli_index([4])
        with pytest.raises(ValueError):
            walsh_matrix(MAX_QUBITS + 1)


class TestPauliMatrix:
    def test_identity_and_z(self):
        assert np.array_equal(pauli_matrix(0, 1), np.eye(2))
        assert np.array_equal(pauli_matrix(3, 1), np.diag([1, -1]))

    def test_squares_to_identity(self):
        for idx in range(16):
            m = pauli_matrix(idx, 2)
            assert np.allclose(m @ m, np.eye(4))

    def test_product_table(self):
        for n in (1, 2):
            for i in range(4**n):
                for j in range(4**n):
                    phase, k = pauli_product(i, j, n)
                    assert np.allclose(pauli_matrix(i, n) @ pauli_matrix(j, n), phase * pauli_matrix(k, n))


class TestWalsh:
    def test_rows(self):
        w = walsh_matrix(1)
        assert list(w[0]) == [1, 1, 1, 1]
        assert list(w[1]) == [1, 1, -1, -1]

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_structure(self, n):
        w = walsh_matrix(n)
        assert np.array_equal(w, w.T)
        assert set(np.unique(w)) == {-1.0, 1.0}
        assert np.array_equal(w @ w, 4**n * np.eye(4**n))

    @pytest.mark.parametrize("n", [1, 2])
    def test_matches_commutation_oracle(self, n):
        assert np.array_equal(walsh_matrix(n), brute_walsh(n))

    def test_read_only(self):
        with pytest.raises(ValueError):
            walsh_matrix(1)[0, 0] = 5


class TestPtmConversions:
    def test_identity_unitary(self):
        assert np.allclose(unitary_to_ptm(np.eye(4)), np.eye(16))

    def test_x_gate(self):
        assert np.allclose(unitary_to_ptm(X), np.diag([1, 1, -1, -1]))

    def test_rx_rotation_block(self):
        theta = 0.3
        t = unitary_to_ptm(expm(-1j * theta * X / 2))
        # Y -> cos Y + sin Z, Z -> cos Z - sin Y (rotation by the Bloch angle)
        c, s = np.cos(theta), np.sin(theta)
        expect = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, -s], [0, 0, s, c]])
        assert np.allclose(t, expect, atol=1e-12)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            unitary_to_ptm(np.array([[1, 1], [0, 1]]))

    def test_representation_property(self, rng):
        for _ in range(100):
            u, v = random_unitary(rng, 4), random_unitary(rng, 4)
            assert np.allclose(unitary_to_ptm(u @ v), unitary_to_ptm(u) @ unitary_to_ptm(v), atol=1e-9)

    def test_unitary_ptm_is_orthogonal(self, rng):
        for n in (1, 2, 3):
            g = unitary_to_ptm(random_unitary(rng, 2**n))
            assert np.allclose(g.T @ g, np.eye(4**n), atol=1e-9)
            assert is_unitary_ptm(g)
            assert is_trace_preserving(g)

    def test_kraus_matches_unitary(self, rng):
        u = random_unitary(rng, 2)
        assert np.allclose(kraus_to_ptm([u]), unitary_to_ptm(u))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_pauli_rotation_matches_expm(self, n, rng):
        for idx in rng.integers(0, 4**n, size=6):
            theta = rng.uniform(-3, 3)
            u = expm(-1j * theta * pauli_matrix(int(idx), n))
            assert np.allclose(pauli_rotation_ptm(int(idx), theta, n), unitary_to_ptm(u), atol=1e-12)


class TestStates:
    def test_density_examples(self):
        assert np.allclose(density_to_ptm(np.diag([1, 0])).coeffs, [1 / S2, 0, 0, 1 / S2])
        assert np.allclose(density_to_ptm(np.eye(2) / 2).coeffs, [1 / S2, 0, 0, 0])
        assert np.allclose(density_to_ptm(np.full((2, 2), 0.5)).coeffs, [1 / S2, 1 / S2, 0, 0])

    def test_builders_match_density(self):
        for n in (1, 2, 3):
            d = 2**n
            rho0 = np.zeros((d, d))
            rho0[0, 0] = 1
            plus = np.full((d, d), 1 / d)
            assert np.allclose(zero_state(n).coeffs, density_to_ptm(rho0).coeffs)
            assert np.allclose(plus_state(n).coeffs, density_to_ptm(plus).coeffs)

    def test_invalid_density(self):
        with pytest.raises(ValueError):
            density_to_ptm(np.diag([1.0, 1.0]))
        with pytest.raises(ValueError):
            density_to_ptm(np.diag([1.5, -0.5]))
        with pytest.raises(ValueError):
            density_to_ptm(np.array([[0.5, 1], [0, 0.5]]))

    def test_state_invariants(self, rng):
        for n in (1, 2):
            for rank in (1, 2**n):
                s = density_to_ptm(random_density(rng, 2**n, rank))
                assert s.coeffs[0] == pytest.approx(2 ** (-n / 2), abs=1e-12)
                assert s.is_valid()
                if rank == 1:
                    assert s.purity == pytest.approx(1.0, abs=1e-10)
                else:
                    assert s.purity < 1

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            PtmState(np.zeros(3), 1)


class TestObservables:
    def test_examples(self):
        assert np.allclose(observable_to_ptm(Z).coeffs, [0, 0, 0, S2])
        assert np.allclose(observable_to_ptm(np.eye(2)).coeffs, [S2, 0, 0, 0])
        zz = observable_to_ptm(np.kron(Z, Z)).coeffs
        assert zz[15] == pytest.approx(2.0)
        assert np.count_nonzero(np.abs(zz) > 1e-12) == 1

    def test_strict_bound(self):
        observable_to_ptm(Z, strict=True)
        with pytest.raises(ValueError):
            observable_to_ptm(2 * Z, strict=True)
        with pytest.raises(ValueError):
            observable_to_ptm(np.array([[0, 1], [0, 0]]))

    def test_expectation_examples(self):
        z = pauli_observable(3, 1)
        assert expectation(z, zero_state(1)) == pytest.approx(1.0)
        assert expectation(z, density_to_ptm(np.eye(2) / 2)) == pytest.approx(0.0)
        flipped = PtmState(unitary_to_ptm(X) @ zero_state(1).coeffs, 1)
        assert expectation(z, flipped) == pytest.approx(-1.0)
        with pytest.raises(ValueError):
            expectation(z, zero_state(2))

    def test_expectation_equals_trace(self, rng):
        for n in (1, 2, 3):
            for _ in range(20):
                rho = random_density(rng, 2**n)
                m = random_hermitian(rng, 2**n)
                got = expectation(observable_to_ptm(m), density_to_ptm(rho))
                assert got == pytest.approx(np.trace(m @ rho).real, abs=1e-10)

    def test_norm_and_round_trip(self, rng):
        for n in (1, 2):
            m = random_hermitian(rng, 2**n, traceless=True)
            obs = observable_to_ptm(m)
            assert obs.zero_bias
            assert obs.norm <= 2 ** (n / 2) + 1e-12
            assert np.allclose(obs.to_matrix(), m)
            assert obs.spectral_radius() == pytest.approx(1.0)
