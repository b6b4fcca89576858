from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import random_density, random_hermitian, random_unitary

from qemlab.bounds import (
    BOUND_NAMES,
    BoundReport,
    all_bounds,
    eps_tilde,
    noqem_dynamic_range,
    noqem_error_upper,
    qem_rmse_bound_general,
    qem_rmse_bound_pauli,
    qem_rmse_bound_pauli_approx,
    qem_rmse_conjecture,
    sigma_u,
)
from qemlab.channels import depolarizing
from qemlab.pauli import density_to_ptm, observable_to_ptm, pauli_observable, unitary_to_ptm, zero_state
from qemlab.simulator import Circuit, moment_recursion_pauli, run_noiseless, run_noisy

X_PTM = unitary_to_ptm(np.array([[0, 1], [1, 0]]))
EPS_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)


def repeated_x(eps, n_gates):
    return Circuit(1, [(X_PTM, depolarizing(eps))] * n_gates, zero_state(1), pauli_observable(3, 1))


class TestExamples:
    def test_dynamic_range(self):
        assert noqem_dynamic_range(0.0, 1000) == 1.0
        assert noqem_dynamic_range(1e-3 / 3, 1000) == pytest.approx(0.26360, abs=5e-6)
        assert noqem_dynamic_range(1e-3 / 3, 1000) == pytest.approx(math.exp(-4 / 3), rel=1e-14)

    def test_error_upper(self):
        assert noqem_error_upper(1e-3, 0) == 0.0
        assert noqem_error_upper(1e-3, 10) == pytest.approx(0.02, rel=1e-14)

    def test_general(self):
        assert qem_rmse_bound_general(1, 0, 5000) == 0.0
        assert qem_rmse_bound_general(1, 10, 5000) == pytest.approx(0.08953, abs=5e-6)

    def test_general_small_ratio(self):
        for n in (1, 2, 4):
            for ng in (1, 10, 50):
                exact = qem_rmse_bound_general(n, ng, 5000)
                assert exact == pytest.approx(2 ** (n / 2) * math.sqrt(2 * ng / 5000), rel=0.01)

    def test_pauli(self):
        assert qem_rmse_bound_pauli(1, 100, 5000, 0.0) == 0.0
        assert sigma_u(1e-3) == pytest.approx(0.00401203, abs=5e-9)
        assert eps_tilde(1e-3) == pytest.approx(0.01003409, rel=1e-5)
        assert eps_tilde(1e-3) == pytest.approx(2.5 * 0.004012032 + 0.004012032**2 / 4, rel=1e-6)

    def test_pauli_approx(self):
        for ng in np.linspace(1, 500, 50):
            exact = qem_rmse_bound_pauli(1, ng, 5000, 1e-3)
            approx = qem_rmse_bound_pauli_approx(1, ng, 5000, 1e-3)
            assert abs(approx - exact) < 0.005 * exact

    def test_conjecture(self):
        assert qem_rmse_conjecture(1e-2, 0, 5000) == 0.0
        assert qem_rmse_conjecture(1e-2, 100, 5000) == pytest.approx(0.014143, abs=5e-7)


class TestErrors:
    def test_pauli_singular(self):
        for eps in (0.5, 0.7):
            with pytest.raises(ValueError):
                qem_rmse_bound_pauli(1, 10, 5000, eps)
            with pytest.raises(ValueError):
                sigma_u(eps)

    def test_argument_ranges(self):
        with pytest.raises(ValueError):
            noqem_dynamic_range(-0.1, 1)
        with pytest.raises(ValueError):
            noqem_error_upper(1.5, 1)
        with pytest.raises(ValueError):
            qem_rmse_bound_general(1, -1, 5000)
        with pytest.raises(ValueError):
            qem_rmse_bound_general(1, 1, 0)

    def test_report(self):
        assert BoundReport("prop3", 0.1, {}).value == 0.1
        with pytest.raises(ValueError):
            BoundReport("prop5", 0.1, {})
        with pytest.raises(ValueError):
            BoundReport("prop3", -1.0, {})
        with pytest.raises(ValueError):
            BoundReport("prop3", math.inf, {})

    def test_all_bounds(self):
        reports = all_bounds(1, 10, 5000, 1e-3)
        assert tuple(r.name for r in reports) == BOUND_NAMES
        assert reports[1].value == pytest.approx(0.02)
        assert all(r.inputs["N_L"] == 10 for r in reports)


class TestProperties:
    def test_prop3_dominates_prop4(self):
        grid = [e for e in np.linspace(0, 0.2, 81) if eps_tilde(e) <= 2]
        assert max(grid) > 0.1
        for eps in grid:
            for n in (1, 2, 4):
                for ng in (0, 1, 10, 100, 1000):
                    assert qem_rmse_bound_general(n, ng, 5000) >= qem_rmse_bound_pauli(n, ng, 5000, eps)

    def test_monotone(self):
        ngs = np.arange(0, 1001)
        for ns in (100, 5000):
            for name, f in [
                ("prop2", lambda g: noqem_error_upper(1e-3, g)),
                ("prop3", lambda g: qem_rmse_bound_general(1, g, ns)),
                ("prop4", lambda g: qem_rmse_bound_pauli(1, g, ns, 1e-3)),
                ("conjecture", lambda g: qem_rmse_conjecture(1e-3, g, ns)),
            ]:
                vals = np.array([f(g) for g in ngs])
                assert np.all(np.diff(vals) >= 0), name
        prop1 = np.array([noqem_dynamic_range(1e-3, g) for g in ngs])
        assert np.all(np.diff(prop1) <= 0)
        assert np.all(np.diff([noqem_dynamic_range(e, 100) for e in np.linspace(0, 0.1, 50)]) <= 0)
        nss = np.arange(1, 10001, 37)
        for f in (
            lambda s: qem_rmse_bound_general(2, 50, s),
            lambda s: qem_rmse_bound_pauli(2, 50, s, 1e-2),
            lambda s: qem_rmse_conjecture(1e-2, 50, s),
        ):
            assert np.all(np.diff([f(s) for s in nss]) <= 0)

    def test_dynamic_range_holds_on_repeated_x(self):
        for eps in EPS_GRID:
            traj = run_noisy(repeated_x(eps, 2000), trajectory=True)
            k = np.arange(2001)
            assert np.all(np.abs(traj) <= np.exp(-4 * (eps / 3) * k) + 1e-15)

    def test_bracketing_on_repeated_x(self):
        for eps in EPS_GRID:
            c = repeated_x(eps, 1000)
            err = np.abs(run_noisy(c, trajectory=True) - run_noiseless(c, trajectory=True))
            k = np.arange(1001)
            assert np.all(1 - np.exp(-4 * (eps / 3) * k) <= err + 1e-12)
            assert np.all(err <= 2 * eps * k + 1e-15)

    def test_error_upper_on_random_circuits(self):
        rng = np.random.default_rng(500)
        for _ in range(500):
            eps_u = float(rng.uniform(1e-4, 0.1))
            n_gates = int(rng.integers(1, 40))
            steps = [
                (unitary_to_ptm(random_unitary(rng, 2)), depolarizing(float(rng.uniform(0, eps_u))))
                for _ in range(n_gates)
            ]
            state = density_to_ptm(random_density(rng, 2, int(rng.integers(1, 3))))
            obs = observable_to_ptm(random_hermitian(rng, 2, traceless=True))
            c = Circuit(1, steps, state, obs)
            assert abs(run_noisy(c) - run_noiseless(c)) <= noqem_error_upper(eps_u, n_gates)

    def test_analytic_rmse_dominated(self):
        ngs = np.arange(1, 1001)
        for eps in EPS_GRID:
            rmse = moment_recursion_pauli(repeated_x(eps, 1000), 5000).rmse_by_step[1:]
            p3 = np.array([qem_rmse_bound_general(1, g, 5000) for g in ngs])
            p4 = np.array([qem_rmse_bound_pauli(1, g, 5000, eps) for g in ngs])
            assert np.all(rmse <= p3)
            assert np.all(rmse <= p4)
