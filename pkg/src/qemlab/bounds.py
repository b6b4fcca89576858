"""Closed-form error bounds for unmitigated and mitigated circuits."""

from __future__ import annotations

import math
from dataclasses import dataclass

BOUND_NAMES = ("prop1_lb", "prop2_ub", "prop3", "prop4", "conjecture")


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    inputs: dict

    def __post_init__(self):
        if self.name not in BOUND_NAMES:
            raise ValueError(f"unknown bound {self.name!r}")
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"bound value must be finite and nonnegative, got {self.value!r}")


def _check_count(name, value):
    if value < 0:
        raise ValueError(f"{name} must be nonnegative")


def _check_ns(n_samples):
    if not n_samples >= 1:
        raise ValueError("Ns must be at least 1")


def noqem_dynamic_range(eps_l: float, n_layers) -> float:
    """Envelope ``exp(-4 eps_l N_L)`` on an unmitigated zero-bias result."""
    if eps_l < 0:
        raise ValueError("eps_l must be nonnegative")
    _check_count("N_L", n_layers)
    return math.exp(-4.0 * eps_l * n_layers)


def noqem_error_upper(eps_u: float, n_gates) -> float:
    """``|r - r_tilde| <= 2 eps_u N_G``."""
    if not 0 <= eps_u <= 1:
        raise ValueError("eps_u must lie in [0, 1]")
    _check_count("N_G", n_gates)
    return 2.0 * eps_u * n_gates


def _shared_form(n, coeff, n_gates, n_samples):
    _check_count("N_G", n_gates)
    _check_ns(n_samples)
    return 2.0 ** (n / 2) * math.sqrt(math.expm1(coeff * n_gates / n_samples))


def qem_rmse_bound_general(n: int, n_gates, n_samples) -> float:
    """``2**(n/2) sqrt(exp(2 N_G / Ns) - 1)`` for any channel family."""
    return _shared_form(n, 2.0, n_gates, n_samples)


def sigma_u(eps_u: float) -> float:
    """``4 eps_u (1 - eps_u) / (1 - 2 eps_u)**2``."""
    if not 0 <= eps_u < 0.5:
        raise ValueError("eps_u must lie in [0, 1/2)")
    return 4.0 * eps_u * (1.0 - eps_u) / (1.0 - 2.0 * eps_u) ** 2


def eps_tilde(eps_u: float) -> float:
    """``5/2 sigma_u + sigma_u**2 / 4``."""
    s = sigma_u(eps_u)
    return 2.5 * s + 0.25 * s * s


def qem_rmse_bound_pauli(n: int, n_gates, n_samples, eps_u: float) -> float:
    """Refined bound for Pauli channels, ``2**(n/2) sqrt(exp(eps_tilde N_G / Ns) - 1)``."""
    return _shared_form(n, eps_tilde(eps_u), n_gates, n_samples)


def qem_rmse_bound_pauli_approx(n: int, n_gates, n_samples, eps_u: float) -> float:
    """Small-error form with ``eps_tilde`` replaced by ``10 eps_u``."""
    if not 0 <= eps_u < 0.5:
        raise ValueError("eps_u must lie in [0, 1/2)")
    return _shared_form(n, 10.0 * eps_u, n_gates, n_samples)


def qem_rmse_conjecture(eps: float, n_gates, n_samples) -> float:
    """``sqrt(exp(eps N_G / Ns) - 1)``; reported, never asserted."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return _shared_form(0, eps, n_gates, n_samples)


def all_bounds(n: int, n_gates, n_samples, eps: float, n_layers=None) -> list[BoundReport]:
    """Every bound for a depolarizing(eps) circuit, with ``eps_l = eps/3`` and ``eps_u = eps``."""
    if n_layers is None:
        n_layers = n_gates
    inputs = dict(n=n, N_G=n_gates, N_L=n_layers, Ns=n_samples, eps=eps)
    return [
        BoundReport("prop1_lb", noqem_dynamic_range(eps / 3, n_layers), inputs),
        BoundReport("prop2_ub", noqem_error_upper(eps, n_gates), inputs),
        BoundReport("prop3", qem_rmse_bound_general(n, n_gates, n_samples), inputs),
        BoundReport("prop4", qem_rmse_bound_pauli(n, n_gates, n_samples, eps), inputs),
        BoundReport("conjecture", qem_rmse_conjecture(eps, n_gates, n_samples), inputs),
    ]
