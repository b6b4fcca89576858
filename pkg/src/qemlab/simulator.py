"""Noisy-circuit estimators in the PTM picture.

A :class:`Circuit` is a sequence of perfect gates, each followed by zero or
more noise channels.  The estimators are

* ``run_noiseless`` / ``run_noisy`` -- deterministic PTM products,
* ``run_exact_qem`` -- every channel followed by its exact inverse,
* ``run_mc_qem_empirical`` -- per-gate multinomial frequencies define a random
  approximate inverse ``Gamma_tilde``,
* ``run_mc_qem_concat`` -- whole-circuit samples, one sampled operation per gate
  and the signed average of the resulting expectations.

All Monte Carlo estimates are computed in expectation mode: each sampled
circuit is evaluated exactly.  Measurement shot noise is accounted for
separately through :func:`intrinsic_variance`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import GeneralChannel, PauliChannel
from .pauli import Observable, PtmState, is_unitary_ptm
from .quasiprob import (
    QuasiProbDecomposition,
    alpha_second_moment,
    decompose,
    draw_count,
    invert_pauli,
    residual_covariance,
)

MODES = ("noiseless", "noisy", "exact_qem", "mc_empirical", "mc_concat")

#: Upper limit on whole-circuit samples drawn by the concatenation estimator.
MAX_CONCAT_SAMPLES = 10**9


@dataclass(frozen=True, eq=False)
class Step:
    gate: np.ndarray
    noise: tuple = ()
    qubits: tuple = ()
    label: str = ""


def _as_step(item) -> Step:
    if isinstance(item, Step):
        step = item
    else:
        gate, noise = item
        step = Step(gate, noise)
    noise = step.noise
    if noise is None:
        noise = ()
    elif isinstance(noise, (PauliChannel, GeneralChannel)):
        noise = (noise,)
    else:
        noise = tuple(noise)
    gate = np.asarray(step.gate, dtype=float)
    gate.setflags(write=False)
    return Step(gate, noise, tuple(step.qubits), step.label)


@dataclass(frozen=True, eq=False)
class Circuit:
    """Perfect gates with trailing noise, an input state and an observable.

    ``steps`` accepts :class:`Step` objects or ``(gate_ptm, noise)`` pairs where
    ``noise`` is ``None``, a channel, or a sequence of channels applied in order.
    ``marks`` lists step counts after which trajectory values are recorded.
    """

    n: int
    steps: tuple
    input_state: PtmState
    observable: Observable
    marks: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        steps = tuple(_as_step(s) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        d = 4**self.n
        if self.input_state.n != self.n or self.observable.n != self.n:
            raise ValueError("state/observable qubit count does not match circuit")
        for k, step in enumerate(steps):
            if step.gate.shape != (d, d):
                raise ValueError(f"step {k}: gate has shape {step.gate.shape}, expected {(d, d)}")
            if not is_unitary_ptm(step.gate):
                raise ValueError(f"step {k}: gate PTM is not orthogonal-block (unitary)")
            for ch in step.noise:
                if ch.n != self.n:
                    raise ValueError(f"step {k}: noise acts on {ch.n} qubits, circuit has {self.n}")
        marks = tuple(int(m) for m in self.marks)
        if any(not 0 <= m <= len(steps) for m in marks):
            raise ValueError("trajectory marks must lie in [0, number of steps]")
        object.__setattr__(self, "marks", marks)

    @property
    def n_gates(self) -> int:
        return len(self.steps)

    @property
    def channels(self) -> list:
        return [ch for step in self.steps for ch in step.noise]

    def prefix(self, k: int) -> "Circuit":
        return Circuit(self.n, self.steps[:k], self.input_state, self.observable)


@dataclass(frozen=True, eq=False)
class MomentState:
    """Mean and second moment of the random PTM state after ``k`` steps."""

    mu: np.ndarray
    A: np.ndarray
    k: int

    @property
    def covariance(self) -> np.ndarray:
        return self.A - np.outer(self.mu, self.mu)


@dataclass(frozen=True)
class MomentResult:
    state: MomentState
    rmse: float
    rmse_by_step: np.ndarray
    trace_by_step: np.ndarray
    min_cov_eig_by_step: np.ndarray | None = None


@dataclass(frozen=True)
class EstimateRecord:
    value: float
    mode: str
    seed: int | None
    samples_used: int

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not math.isfinite(self.value):
            raise ValueError("estimate is not finite")


# ---------------------------------------------------------------- deterministic


def _record(values, circuit, v, k):
    if values is not None:
        values[k] = float(circuit.observable.coeffs @ v)


def _trajectory_or_value(circuit, apply_step, trajectory):
    v = circuit.input_state.coeffs.copy()
    values = np.empty(circuit.n_gates + 1) if trajectory else None
    _record(values, circuit, v, 0)
    for k, step in enumerate(circuit.steps, start=1):
        v = apply_step(step, v)
        _record(values, circuit, v, k)
    if trajectory:
        return values
    return float(circuit.observable.coeffs @ v)


def _apply_channel(ch, v):
    if isinstance(ch, PauliChannel):
        return ch.diag * v
    return ch.ptm @ v


def run_noiseless(circuit: Circuit, trajectory: bool = False):
    """``<v_ob, prod G_k v_0>``; with ``trajectory`` the value after every step."""
    return _trajectory_or_value(circuit, lambda step, v: step.gate @ v, trajectory)


def run_noisy(circuit: Circuit, trajectory: bool = False):
    """``<v_ob, prod C_k G_k v_0>``."""

    def apply(step, v):
        v = step.gate @ v
        for ch in step.noise:
            v = _apply_channel(ch, v)
        return v

    return _trajectory_or_value(circuit, apply, trajectory)


def decompose_circuit(circuit: Circuit, basis=None) -> list[tuple]:
    """Inverse-channel decompositions for every noise channel, per step.

    Channels shared between steps (same object) are decomposed once.
    """
    cache = {}
    out = []
    for step in circuit.steps:
        per_step = []
        for ch in step.noise:
            key = id(ch)
            if key not in cache:
                cache[key] = decompose(ch, basis)
            per_step.append(cache[key])
        out.append(tuple(per_step))
    return out


def _check_decomps(circuit, decomps):
    if decomps is None:
        return decompose_circuit(circuit)
    if len(decomps) != circuit.n_gates or any(
        len(ds) != len(step.noise) for ds, step in zip(decomps, circuit.steps)
    ):
        raise ValueError("decompositions do not match the circuit's noise channels")
    return decomps


def run_exact_qem(circuit: Circuit, decomps=None, trajectory: bool = False):
    """Each channel followed by its exactly implemented inverse."""
    decomps = _check_decomps(circuit, decomps)
    inverses = {}
    for ds in decomps:
        for d in ds:
            if id(d) not in inverses:
                inverses[id(d)] = d.alpha @ d.ops if d.diagonal else d.reconstruct()
    it = iter(decomps)

    def apply(step, v):
        v = step.gate @ v
        for ch, d in zip(step.noise, next(it)):
            v = _apply_channel(ch, v)
            inv = inverses[id(d)]
            v = inv * v if d.diagonal else inv @ v
        return v

    return _trajectory_or_value(circuit, apply, trajectory)


# ---------------------------------------------------------------- Monte Carlo


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


@dataclass
class _Slot:
    decomp: QuasiProbDecomposition
    channel: object
    draws: int | None


class _Program:
    """Circuit flattened for repeated Monte Carlo evaluation."""

    def __init__(self, circuit: Circuit, n_samples, decomps):
        self.circuit = circuit
        self.n_samples = n_samples
        decomps = _check_decomps(circuit, decomps)
        self.steps = []
        self.slots = []
        for step, ds in zip(circuit.steps, decomps):
            ids = []
            for ch, d in zip(step.noise, ds):
                if d.diagonal != isinstance(ch, PauliChannel):
                    raise ValueError("Pauli channels need Pauli decompositions and vice versa")
                ids.append(len(self.slots))
                self.slots.append(_Slot(d, ch, draw_count(d, n_samples)))
            self.steps.append((step.gate, ids))
        # group slots sharing a decomposition so their draws can be batched
        groups = {}
        for i, slot in enumerate(self.slots):
            groups.setdefault((id(slot.decomp), slot.draws), []).append(i)
        self.groups = list(groups.values())

    def draw_alpha_tilde(self, rng) -> list[np.ndarray]:
        """Random ``alpha_tilde`` per slot (exact ``alpha`` when Ns is infinite)."""
        out = [None] * len(self.slots)
        for members in self.groups:
            slot = self.slots[members[0]]
            d = slot.decomp
            if slot.draws is None:
                for i in members:
                    out[i] = d.alpha
                continue
            supp = d.support
            counts = rng.multinomial(slot.draws, d.sampling_probs[supp], size=len(members))
            weights = np.zeros((len(members), d.size))
            weights[:, supp] = counts * (d.norm1 * d.signs[supp] / slot.draws)
            for row, i in enumerate(members):
                out[i] = weights[row]
        return out

    def empirical_values(self, rng, trajectory: bool):
        circuit = self.circuit
        alphas = self.draw_alpha_tilde(rng)
        obs = circuit.observable.coeffs
        v = circuit.input_state.coeffs.copy()
        values = np.empty(len(self.steps) + 1) if trajectory else None
        if trajectory:
            values[0] = obs @ v
        for k, (gate, ids) in enumerate(self.steps, start=1):
            v = gate @ v
            for i in ids:
                slot = self.slots[i]
                d = slot.decomp
                if d.diagonal:
                    supp = d.support
                    v = v * (slot.channel.diag * (alphas[i][supp] @ d.ops[supp]))
                else:
                    v = slot.channel.ptm @ v
                    v = np.tensordot(alphas[i], d.ops, axes=1) @ v
            if trajectory:
                values[k] = obs @ v
        if trajectory:
            return values
        return float(obs @ v)

    # -- concatenation mode

    def prepare_concat(self):
        if getattr(self, "_concat", None) is not None:
            return self._concat
        circuit = self.circuit
        d_dim = 4**circuit.n
        slots = self.slots
        # pre-map for each slot: gates since previous slot, then the channel
        pre = []
        pending = np.eye(d_dim)
        for gate, ids in self.steps:
            pending = gate @ pending
            for i in ids:
                pre.append(slots[i].channel.ptm @ pending)
                pending = np.eye(d_dim)
        tail = pending
        dom = [int(np.argmax(s.decomp.sampling_probs)) for s in slots]
        dom_ops = [s.decomp.operator(j) for s, j in zip(slots, dom)]
        n_slots = len(slots)
        fwd = np.empty((n_slots, d_dim))
        u = circuit.input_state.coeffs.copy()
        for s in range(n_slots):
            fwd[s] = pre[s] @ u
            u = dom_ops[s] @ fwd[s]
        r_base = float(circuit.observable.coeffs @ (tail @ u))
        bwd = np.empty((n_slots, d_dim))
        b = tail.T @ circuit.observable.coeffs
        for s in range(n_slots - 1, -1, -1):
            bwd[s] = b
            b = pre[s].T @ (dom_ops[s].T @ b)
        q = []
        for s, slot in enumerate(slots):
            d = slot.decomp
            if d.diagonal:
                q.append(d.ops @ (bwd[s] * fwd[s]))
            else:
                q.append(np.einsum("i,lij,j->l", bwd[s], d.ops, fwd[s]))
        log_scale = sum(math.log(s.decomp.norm1) for s in slots)
        if self.n_samples is None or math.isinf(self.n_samples):
            total = None
        else:
            expected = self.n_samples * math.exp(2 * log_scale)
            if expected > MAX_CONCAT_SAMPLES:
                raise ValueError(
                    f"concatenation mode needs {expected:.3g} samples, above the cap"
                    f" of {MAX_CONCAT_SAMPLES}"
                )
            total = max(1, int(math.floor(expected + 0.5)))
        sign_base = 1.0
        for s, j in zip(slots, dom):
            sign_base *= s.decomp.signs[j]
        # padded per-slot tables: sign flip relative to the dominant op, and q
        width = max(s.decomp.size for s in slots)
        flip = np.zeros((n_slots, width))
        qtab = np.zeros((n_slots, width))
        for i, (slot, j) in enumerate(zip(slots, dom)):
            size = slot.decomp.size
            flip[i, :size] = slot.decomp.signs * slot.decomp.signs[j]
            qtab[i, :size] = q[i]
        groups = {}
        for i, slot in enumerate(slots):
            groups.setdefault(id(slot.decomp), []).append(i)
        groups = [np.array(g) for g in groups.values()]
        self._concat = dict(
            pre=pre, dom=np.array(dom), fwd=fwd, bwd=bwd, flip=flip, qtab=qtab,
            r_base=r_base, total=total, scale=math.exp(log_scale),
            sign_base=sign_base, groups=groups,
        )
        return self._concat

    def concat_value(self, rng) -> tuple[float, int]:
        cfg = self.prepare_concat()
        slots = self.slots
        total = cfg["total"]
        if total is None:
            raise ValueError("concatenation mode needs a finite Ns")
        dom = cfg["dom"]
        slot_ids, ops = [], []
        for members in cfg["groups"]:
            d = slots[members[0]].decomp
            supp = d.support
            counts = np.zeros((members.size, d.size), dtype=np.int64)
            counts[:, supp] = rng.multinomial(total, d.sampling_probs[supp], size=members.size)
            counts[np.arange(members.size), dom[members]] = 0
            rows, cols = np.nonzero(counts)
            reps = counts[rows, cols]
            slot_ids.append(np.repeat(members[rows], reps))
            ops.append(np.repeat(cols, reps))
        slot_ids = np.concatenate(slot_ids)
        ops = np.concatenate(ops)
        sign_base = cfg["sign_base"]
        base = sign_base * cfg["r_base"]
        if not ops.size:
            return cfg["scale"] * base, total
        pos = _distinct_positions(rng, slot_ids, total)
        order = np.lexsort((slot_ids, pos))
        pos, slot_ids, ops = pos[order], slot_ids[order], ops[order]
        first = np.ones(pos.size, dtype=bool)
        first[1:] = pos[1:] != pos[:-1]
        starts = np.flatnonzero(first)
        lengths = np.diff(np.append(starts, pos.size))
        n_dev = starts.size

        single = starts[lengths == 1]
        s_ids, s_ops = slot_ids[single], ops[single]
        terms = [sign_base * cfg["flip"][s_ids, s_ops] * cfg["qtab"][s_ids, s_ops]]
        multi = lengths > 1
        if multi.any():
            terms.append(self._chains(cfg, starts[multi], lengths[multi], slot_ids, ops))
        acc = math.fsum(np.concatenate(terms))
        value = cfg["scale"] / total * (base * (total - n_dev) + acc)
        return value, total

    def _chains(self, cfg, starts, lengths, slot_ids, ops) -> np.ndarray:
        """Signed values of all multi-deviation samples, swept slot by slot together."""
        n_chains = starts.size
        last = starts + lengths - 1
        s0, s1 = slot_ids[starts], slot_ids[last]
        lo, hi = int(s0.min()), int(s1.max())
        optab = np.tile(cfg["dom"][lo:hi + 1], (n_chains, 1))
        members = np.concatenate([np.arange(st, st + ln) for st, ln in zip(starts, lengths)])
        owner = np.repeat(np.arange(n_chains), lengths)
        optab[owner, slot_ids[members] - lo] = ops[members]
        flips = cfg["flip"][slot_ids[members], ops[members]]
        negatives = np.bincount(owner, weights=flips < 0, minlength=n_chains)
        signs = cfg["sign_base"] * np.where(negatives % 2 == 1, -1.0, 1.0)
        v = np.zeros((cfg["fwd"].shape[1], n_chains))
        out = np.empty(n_chains)
        for s in range(lo, hi + 1):
            v = cfg["pre"][s] @ v
            starting = s0 == s
            if starting.any():
                v[:, starting] = cfg["fwd"][s][:, None]
            d = self.slots[s].decomp
            chosen = optab[:, s - lo]
            if d.diagonal:
                v = v * d.ops[chosen].T
            else:
                v = np.einsum("cij,jc->ic", d.ops[chosen], v)
            ending = s1 == s
            if ending.any():
                out[ending] = cfg["bwd"][s] @ v[:, ending]
        return signs * out

    def _chain(self, cfg, sids, ops) -> float:
        """One multi-deviation sample evaluated step by step (reference path)."""
        slots = self.slots
        dom = cfg["dom"]
        sign = cfg["sign_base"]
        dev = dict(zip(sids.tolist(), ops.tolist()))
        s0, s1 = int(sids[0]), int(sids[-1])
        v = cfg["fwd"][s0]
        for s in range(s0, s1 + 1):
            if s > s0:
                v = cfg["pre"][s] @ v
            d = slots[s].decomp
            op = dev.get(s, dom[s])
            if s in dev:
                sign *= cfg["flip"][s, op]
            v = d.ops[op] * v if d.diagonal else d.ops[op] @ v
        return float(sign * (cfg["bwd"][s1] @ v))


def _distinct_positions(rng, slot_ids, total) -> np.ndarray:
    """Uniform sample positions, distinct within each slot."""
    pos = rng.integers(0, total, size=slot_ids.size)
    while True:
        key = slot_ids.astype(np.int64) * total + pos
        _, first_idx = np.unique(key, return_index=True)
        dup = np.ones(key.size, dtype=bool)
        dup[first_idx] = False
        if not dup.any():
            return pos
        pos[dup] = rng.integers(0, total, size=int(dup.sum()))


def run_mc_qem_empirical(circuit: Circuit, n_samples, rng=None, decomps=None) -> EstimateRecord:
    """One Monte Carlo QEM estimate from per-gate empirical frequencies."""
    gen, seed = _rng(rng)
    prog = _Program(circuit, n_samples, decomps)
    value = prog.empirical_values(gen, trajectory=False)
    used = sum(s.draws or 0 for s in prog.slots)
    return EstimateRecord(value, "mc_empirical", seed, used)


def run_mc_qem_concat(circuit: Circuit, n_samples, rng=None, decomps=None) -> EstimateRecord:
    """One Monte Carlo QEM estimate from concatenated whole-circuit samples."""
    gen, seed = _rng(rng)
    prog = _Program(circuit, n_samples, decomps)
    if not prog.slots:
        return EstimateRecord(run_noiseless(circuit), "mc_concat", seed, 0)
    value, total = prog.concat_value(gen)
    return EstimateRecord(value, "mc_concat", seed, total)


def default_workers() -> int:
    env = os.environ.get("QEM_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def mc_trials(
    circuit: Circuit,
    n_samples,
    trials: int,
    seed: int,
    mode: str = "mc_empirical",
    decomps=None,
    trajectory: bool = False,
    workers: int | None = None,
) -> np.ndarray:
    """Run independent Monte Carlo trials; trial ``t`` uses ``trial_rng(seed, t)``.

    Returns shape ``(trials,)``, or ``(trials, n_gates + 1)`` with
    ``trajectory=True`` (empirical mode only).  Results do not depend on
    ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if mode not in ("mc_empirical", "mc_concat"):
        raise ValueError(f"unknown Monte Carlo mode {mode!r}")
    if trajectory and mode != "mc_empirical":
        raise ValueError("trajectories are only recorded in empirical mode")
    prog = _Program(circuit, n_samples, decomps)
    if mode == "mc_concat" and prog.slots:
        prog.prepare_concat()

    def one(t):
        gen = trial_rng(seed, t)
        if mode == "mc_empirical":
            return prog.empirical_values(gen, trajectory)
        if not prog.slots:
            return run_noiseless(circuit)
        return prog.concat_value(gen)[0]

    def chunk(bounds):
        lo, hi = bounds
        return [one(t) for t in range(lo, hi)]

    workers = workers or default_workers()
    workers = max(1, min(workers, trials))
    if workers == 1:
        results = chunk((0, trials))
    else:
        edges = np.linspace(0, trials, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(chunk, zip(edges[:-1], edges[1:]))
            results = [r for part in parts for r in part]
    return np.array(results)


def rmse_from_trials(values, reference) -> tuple[float, float]:
    """Empirical RMSE and its delta-method standard error, summed order-insensitively."""
    err2 = (np.asarray(values, dtype=float) - reference) ** 2
    t = err2.size
    mse = math.fsum(err2) / t
    rmse = math.sqrt(mse)
    if t < 2 or rmse == 0:
        return rmse, 0.0
    var = math.fsum((err2 - mse) ** 2) / (t - 1)
    return rmse, math.sqrt(var / t) / (2 * rmse)


def rmse_columns(values, reference) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise :func:`rmse_from_trials` for a ``(trials, k)`` array."""
    values = np.asarray(values)
    ref = np.broadcast_to(reference, values.shape[1:])
    pairs = [rmse_from_trials(values[:, j], ref[j]) for j in range(values.shape[1])]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


# ---------------------------------------------------------------- moments


def _moment_result(circuit, mu, cov, rmse, trace, min_eig=None):
    state = MomentState(mu, cov + np.outer(mu, mu), circuit.n_gates)
    return MomentResult(state, float(rmse[-1]), rmse, trace, min_eig)


def _record_moments(k, obs, mu, cov, rmse, trace, min_eig):
    rmse[k] = math.sqrt(max(float(obs @ cov @ obs), 0.0))
    trace[k] = np.trace(cov) + mu @ mu
    if min_eig is not None:
        min_eig[k] = np.min(np.linalg.eigvalsh(cov))


def moment_recursion_pauli(circuit: Circuit, n_samples, check_psd: bool = False) -> MomentResult:
    """Exact mean and second moment of the empirical-mode state, Pauli channels only.

    Every step maps ``A -> (G A G^T) * (1 1^T + Xi)`` for each of its channels
    and ``mu -> G mu``.  The covariance ``A - mu mu^T`` is propagated directly,
    ``S -> (G S G^T) * (1 + Xi) + (G mu)(G mu)^T * Xi``, which keeps it exactly
    zero when there is no sampling noise.
    """
    xis = {}
    for ch in circuit.channels:
        if not isinstance(ch, PauliChannel):
            raise TypeError("non-Pauli channel present; use moment_recursion_general")
        if id(ch) not in xis:
            xis[id(ch)] = residual_covariance(invert_pauli(ch), ch, n_samples)
    obs = circuit.observable.coeffs
    mu = circuit.input_state.coeffs.copy()
    cov = np.zeros((mu.size, mu.size))
    rmse = np.empty(circuit.n_gates + 1)
    trace = np.empty(circuit.n_gates + 1)
    min_eig = np.empty(circuit.n_gates + 1) if check_psd else None
    _record_moments(0, obs, mu, cov, rmse, trace, min_eig)
    for k, step in enumerate(circuit.steps, start=1):
        g = step.gate
        mu = g @ mu
        cov = g @ cov @ g.T
        outer = np.outer(mu, mu)
        for ch in step.noise:
            xi = xis[id(ch)]
            cov = cov + (cov + outer) * xi
        _record_moments(k, obs, mu, cov, rmse, trace, min_eig)
    return _moment_result(circuit, mu, cov, rmse, trace, min_eig)


def moment_recursion_general(circuit: Circuit, n_samples, decomps=None, basis=None) -> MomentResult:
    """Exact moments for arbitrary channels and operation bases.

    Uses ``E[alpha_tilde alpha_tilde^T] = (1 - 1/N) alpha alpha^T + ||alpha||_1^2/N P``
    so each channel maps ``M -> (1 - 1/N) Gamma M Gamma^T + ||alpha||_1^2/N sum_l p_l O_l M O_l^T``
    with ``M = C A C^T`` and ``Gamma = sum_l alpha_l O_l``.  As in the Pauli
    version the covariance is propagated directly, using ``Gamma C mu = mu``.
    """
    if decomps is None:
        decomps = decompose_circuit(circuit, basis)
    decomps = _check_decomps(circuit, decomps)
    prepared = {}
    for ds in decomps:
        for d in ds:
            if id(d) in prepared:
                continue
            supp = d.support
            prepared[id(d)] = (
                d.reconstruct(),
                [d.operator(i) for i in supp],
                d.sampling_probs[supp],
                alpha_second_moment(d, n_samples),
            )
    obs = circuit.observable.coeffs
    mu = circuit.input_state.coeffs.copy()
    cov = np.zeros((mu.size, mu.size))
    rmse = np.empty(circuit.n_gates + 1)
    trace = np.empty(circuit.n_gates + 1)
    _record_moments(0, obs, mu, cov, rmse, trace, None)
    for k, (step, ds) in enumerate(zip(circuit.steps, decomps), start=1):
        g = step.gate
        mu = g @ mu
        cov = g @ cov @ g.T
        for ch, d in zip(step.noise, ds):
            gamma, ops, probs, (ca, cb) = prepared[id(d)]
            c = ch.ptm
            m_cov = c @ cov @ c.T
            cov = ca * (gamma @ m_cov @ gamma.T)
            if cb:
                cm = c @ mu
                m_all = m_cov + np.outer(cm, cm)
                cov = cov + cb * sum(p * (o @ m_all @ o.T) for p, o in zip(probs, ops))
                cov = cov - (1.0 - ca) * np.outer(mu, mu)
        _record_moments(k, obs, mu, cov, rmse, trace, None)
    return _moment_result(circuit, mu, cov, rmse, trace)


# ---------------------------------------------------------------- shot noise


def intrinsic_variance(obs: Observable, state: PtmState, strict: bool = True) -> float:
    """Shot variance of a Pauli-decomposed measurement of ``obs`` on ``state``.

    ``v_ob^T (I / 2**n - diag(v)**2) v_ob``: each Pauli term measured on its
    own, so covariances between terms do not enter.
    """
    if obs.n != state.n:
        raise ValueError("observable and state act on different qubit counts")
    if strict:
        if not obs.zero_bias:
            raise ValueError("observable has a nonzero identity component")
        if obs.spectral_radius() > 1 + 1e-10:
            raise ValueError("observable has eigenvalues outside [-1, 1]")
    v = state.coeffs
    w = obs.coeffs
    val = float(w @ ((2.0 ** -obs.n - v * v) * w))
    return max(val, 0.0)


def shot_limited_mse(bias: float, variance: float, n_samples) -> float:
    """``bias**2 + variance / Ns``."""
    return bias * bias + variance / n_samples
