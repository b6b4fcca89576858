from __future__ import annotations

import itertools
import math

import numpy as np
import pytest


def random_unitary(rng, d):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, d, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, d, traceless=False, bounded=True):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = (g + g.conj().T) / 2
    if traceless:
        m -= np.trace(m) / d * np.eye(d)
    if bounded:
        m /= np.max(np.abs(np.linalg.eigvalsh(m)))
    return m


def compositions(total, parts):
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cuts + (total + parts - 1,)
        yield np.array([bounds[i + 1] - bounds[i] - 1 for i in range(parts)])


def multinomial_pmf(counts, probs):
    n = int(counts.sum())
    coef = math.factorial(n)
    for c in counts:
        coef //= math.factorial(int(c))
    return coef * float(np.prod([p**c for p, c in zip(probs, counts)]))


def enumerate_alpha_tilde(d, draws):
    """Exact distribution of alpha_tilde over all multinomial outcomes."""
    supp = d.support
    for counts in compositions(draws, supp.size):
        full = np.zeros(d.size)
        full[supp] = counts
        yield multinomial_pmf(counts, d.sampling_probs[supp]), d.norm1 * d.signs * full / draws


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
