"""Experiment harness: Bloch-sphere benchmarks, QAOA multiuser detection, bound tables.

Each ``exp_*`` function takes an :class:`ExperimentConfig` and returns a dict of
:class:`Table` objects keyed by file stem.  :func:`run_experiment` dispatches on
``cfg.experiment`` and, when ``cfg.out_path`` is set, writes the CSVs together
with a ``manifest.json``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    noqem_dynamic_range,
    noqem_error_upper,
    qem_rmse_bound_general,
    qem_rmse_bound_pauli,
    qem_rmse_conjecture,
)
from .channels import (
    amplitude_damping,
    compose,
    depolarizing,
    gate_error_probability,
    lift_single_qubit,
    lift_two_qubit,
    two_qubit_depolarizing,
)
from .pauli import (
    Observable,
    pauli_index,
    pauli_observable,
    pauli_rotation_ptm,
    plus_state,
    unitary_to_ptm,
    zero_state,
)
from .simulator import (
    Circuit,
    Step,
    decompose_circuit,
    mc_trials,
    moment_recursion_general,
    moment_recursion_pauli,
    rmse_columns,
    run_exact_qem,
    run_noiseless,
    run_noisy,
)

EXPERIMENTS = ("bloch_x", "bloch_rx", "amp_damp_x", "amp_damp_rx", "qaoa_mud", "bounds_table")
MODES = ("noqem", "exact_qem", "mc_empirical", "mc_concat")
NOISE_MODELS = ("per_qubit", "two_qubit")

# experiment-specific defaults applied where the config leaves a field unset
_DEFAULTS = {
    "bloch_x": dict(eps=1e-3, ng_list=tuple(range(1, 1001))),
    "bloch_rx": dict(eps=1e-3, ng_list=tuple(range(1, 1001))),
    "amp_damp_x": dict(eps=0.0, ng_list=tuple(range(1, 1001))),
    "amp_damp_rx": dict(eps=0.0, ng_list=tuple(range(1, 1001))),
    "qaoa_mud": dict(eps=3e-4, p_list=(9, 16, 25, 36, 49, 64, 81)),
    "bounds_table": dict(eps=1e-3, ng_list=tuple(range(0, 1001))),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    ng_list: tuple | None = None
    p_list: tuple | None = None
    traj_p: int = 81
    eps: float | None = None
    eps_list: tuple = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)
    gamma: float = 1e-3
    theta: float = math.pi / 256
    ns: int = 5000
    trials: int = 200
    seed: int = 0
    modes: tuple = ("noqem", "exact_qem", "mc_empirical")
    noise_model: str = "per_qubit"
    n_users: int = 4
    n_antennas: int = 4
    snr_db: float = 12.0
    out_path: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        defaults = _DEFAULTS[self.experiment]
        for key, value in defaults.items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, value)
        for key in ("ng_list", "p_list", "eps_list", "modes"):
            value = getattr(self, key)
            if value is not None:
                object.__setattr__(self, key, tuple(value))
        if self.ns < 1:
            raise ValueError("ns must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.eps < 0.75:
            raise ValueError("eps must lie in [0, 3/4)")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if any(m not in MODES for m in self.modes):
            raise ValueError(f"modes must be a subset of {MODES}")
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(f"noise_model must be one of {NOISE_MODELS}")
        for key in ("ng_list", "p_list"):
            value = getattr(self, key)
            if value is not None and any(int(v) != v or v < 0 for v in value):
                raise ValueError(f"{key} must hold nonnegative integers")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in ("out_path", "workers")}
        blob = json.dumps(payload, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Table:
    columns: tuple
    rows: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format(float(x), ".17g") for x in row))
        return "\n".join(lines) + "\n"


def _table(columns: dict) -> Table:
    names = tuple(columns)
    rows = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    return Table(names, rows)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# ---------------------------------------------------------------- circuits

X_PTM = unitary_to_ptm(np.array([[0, 1], [1, 0]]))


def rx_ptm(theta: float) -> np.ndarray:
    """PTM of ``exp(-i theta X / 2)``."""
    return pauli_rotation_ptm(1, theta / 2, 1)


def repeated_gate_circuit(gate, noise, n_gates: int) -> Circuit:
    """``n_gates`` copies of one noisy single-qubit gate, ``|0>`` input, Z readout."""
    return Circuit(1, [(gate, noise)] * n_gates, zero_state(1), pauli_observable(3, 1))


def _bloch_circuit(cfg: ExperimentConfig, n_gates: int) -> Circuit:
    gate = X_PTM if cfg.experiment.endswith("_x") else rx_ptm(cfg.theta)
    if cfg.experiment.startswith("amp_damp"):
        noise = amplitude_damping(cfg.gamma)
    else:
        noise = depolarizing(cfg.eps)
    return repeated_gate_circuit(gate, noise, n_gates)


# ---------------------------------------------------------------- MUD / QAOA


@dataclass(frozen=True, eq=False)
class MudInstance:
    H: np.ndarray
    x_true: np.ndarray
    y: np.ndarray
    noise_var: float
    Z_norm: float

    @property
    def h(self) -> np.ndarray:
        return self.H.T @ self.y

    @property
    def J(self) -> np.ndarray:
        return self.H.T @ self.H


def _z_norm(h, j) -> float:
    n = h.size
    iu = np.triu_indices(n, k=1)
    return float(np.sum(np.abs(h)) + np.sum(np.abs(j[iu])))


def make_mud_instance(n: int, m: int, snr_db: float, rng) -> MudInstance:
    """Rayleigh-faded uplink ``y = H x + w`` with ``H_ij ~ N(0, 1/m)``.

    Draw order is ``H``, then ``x``, then ``w``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    noise_var = 10.0 ** (-snr_db / 10.0)
    h_mat = rng.normal(0.0, math.sqrt(1.0 / m), size=(m, n))
    x = rng.choice(np.array([-1.0, 1.0]), size=n)
    w = rng.normal(0.0, math.sqrt(noise_var), size=m)
    y = h_mat @ x + w
    z = _z_norm(h_mat.T @ y, h_mat.T @ h_mat)
    return MudInstance(h_mat, x, y, noise_var, z)


def _z_string(qubits, n) -> int:
    digits = [0] * n
    for q in qubits:
        digits[q] = 3
    return pauli_index(digits)


def build_mud_observable(inst: MudInstance) -> Observable:
    """``(sum_i h_i Z_i - sum_{i<j} J_ij Z_i Z_j) / Z_norm`` in PTM coefficients."""
    if inst.Z_norm == 0:
        raise ValueError("degenerate instance: all Hamiltonian coefficients vanish")
    n = inst.H.shape[1]
    h, j = inst.h, inst.J
    coeffs = np.zeros(4**n)
    scale = 2.0 ** (n / 2) / inst.Z_norm
    for i in range(n):
        coeffs[_z_string([i], n)] = scale * h[i]
    for a in range(n):
        for b in range(a + 1, n):
            coeffs[_z_string([a, b], n)] = -scale * j[a, b]
    return Observable(coeffs, n)


def mud_terms(obs: Observable) -> tuple[list, list]:
    """Nonzero ``((i, j), coeff)`` pair terms and ``(i, coeff)`` single terms.

    Coefficients are Pauli-basis weights, i.e. PTM coefficients over ``2**(n/2)``.
    """
    n = obs.n
    scale = 2.0 ** (-n / 2)
    pairs = []
    for a in range(n):
        for b in range(a + 1, n):
            c = obs.coeffs[_z_string([a, b], n)] * scale
            if c != 0:
                pairs.append(((a, b), c))
    singles = []
    for i in range(n):
        c = obs.coeffs[_z_string([i], n)] * scale
        if c != 0:
            singles.append((i, c))
    return pairs, singles


def _gate_noise_factory(n, eps, noise_model):
    cache = {}
    one = depolarizing(eps)

    def noise(qubits):
        key = tuple(qubits)
        if key not in cache:
            if len(key) == 2 and noise_model == "two_qubit":
                cache[key] = lift_two_qubit(two_qubit_depolarizing(eps), key, n)
            else:
                cache[key] = compose(*(lift_single_qubit(one, q, n) for q in key))
        return cache[key]

    return noise


def build_qaoa_circuit(obs: Observable, stages: int, n: int | None = None, eps: float = 0.0,
                       noise_model: str = "per_qubit") -> Circuit:
    """QAOA ansatz on ``|+>^n`` with schedule ``gamma_k = k/P``, ``beta_k = 1 - k/P``.

    Stage ``k`` applies ``exp(-i gamma_k a Z_i Z_j)`` for every pair term in
    lexicographic order, ``exp(-i gamma_k a Z_i)`` for every single term, then
    ``exp(-i beta_k X_i)`` on each qubit.  Each gate is followed by depolarizing
    noise on the qubits it touches.  ``marks`` holds the step count at the end
    of every stage.
    """
    n = obs.n if n is None else n
    if n != obs.n:
        raise ValueError("observable qubit count does not match n")
    if stages < 0:
        raise ValueError("number of stages must be nonnegative")
    pairs, singles = mud_terms(obs)
    noise = _gate_noise_factory(n, eps, noise_model)
    steps = []
    marks = [0]
    for k in range(1, stages + 1):
        gamma_k = k / stages
        beta_k = 1.0 - k / stages
        for (a, b), c in pairs:
            gate = pauli_rotation_ptm(_z_string([a, b], n), gamma_k * c, n)
            steps.append(Step(gate, noise((a, b)), (a, b), f"zz{a}{b}"))
        for i, c in singles:
            gate = pauli_rotation_ptm(_z_string([i], n), gamma_k * c, n)
            steps.append(Step(gate, noise((i,)), (i,), f"z{i}"))
        for i in range(n):
            gate = pauli_rotation_ptm(pauli_index([1 if q == i else 0 for q in range(n)]), beta_k, n)
            steps.append(Step(gate, noise((i,)), (i,), f"x{i}"))
        marks.append(len(steps))
    meta = dict(gates_per_stage=len(pairs) + len(singles) + n, layers_per_stage=None)
    circuit = Circuit(n, steps, plus_state(n), obs, marks=marks, meta=meta)
    if stages:
        meta["layers_per_stage"] = layers_per_stage(
            [s.qubits for s in steps[: meta["gates_per_stage"]]], n
        )
    return circuit


def layers_per_stage(supports, n: int) -> int:
    """Count layers in which every qubit is touched at least once.

    Gates are split greedily into maximal contiguous runs with pairwise
    disjoint supports; runs covering all ``n`` qubits are counted.
    """
    count = 0
    used: set = set()
    for support in list(supports) + [None]:
        if support is not None and not used.intersection(support):
            used.update(support)
            continue
        if len(used) == n:
            count += 1
        used = set(support) if support is not None else set()
    return count


def mud_optimum(obs: Observable) -> float:
    """Largest objective value over computational basis states."""
    return float(np.max(np.linalg.eigvalsh(obs.to_matrix())))


# ---------------------------------------------------------------- helpers


def _mc_columns(circuit, cfg, mode, ng_index, reference, trajectory=True, decomps=None):
    values = mc_trials(circuit, cfg.ns, cfg.trials, cfg.seed, mode=mode, decomps=decomps,
                       trajectory=trajectory, workers=cfg.workers)
    if trajectory:
        values = values[:, ng_index]
    else:
        values = values[:, None]
    return values, rmse_columns(values, reference)


def _mean_columns(values) -> np.ndarray:
    return np.array([math.fsum(values[:, j]) / values.shape[0] for j in range(values.shape[1])])


def _bloch_tables(cfg: ExperimentConfig) -> dict:
    ngs = np.array(sorted(set(int(v) for v in cfg.ng_list)))
    n_max = int(ngs.max())
    circuit = _bloch_circuit(cfg, n_max)
    pauli = not cfg.experiment.startswith("amp_damp")
    ideal = run_noiseless(circuit, trajectory=True)
    noisy = run_noisy(circuit, trajectory=True)
    decomps = decompose_circuit(circuit)
    exact = run_exact_qem(circuit, decomps, trajectory=True)
    cols = {"N_G": ngs, "noiseless": ideal[ngs], "noisy": noisy[ngs]}
    traj = {"N_G": ngs, "noiseless": ideal[ngs]}
    if "noqem" in cfg.modes:
        cols["rmse_noqem"] = np.abs(noisy[ngs] - ideal[ngs])
        traj["noqem"] = noisy[ngs]
    if "exact_qem" in cfg.modes:
        cols["rmse_exact_qem"] = np.abs(exact[ngs] - ideal[ngs])
        traj["exact_qem"] = exact[ngs]
    if "mc_empirical" in cfg.modes:
        if pauli:
            moments = moment_recursion_pauli(circuit, cfg.ns)
        else:
            moments = moment_recursion_general(circuit, cfg.ns, decomps)
        cols["rmse_mc_empirical_analytic"] = moments.rmse_by_step[ngs]
        values, (rmse, se) = _mc_columns(circuit, cfg, "mc_empirical", ngs, ideal[ngs],
                                         decomps=decomps)
        cols["rmse_mc_empirical"] = rmse
        cols["rmse_mc_empirical_se"] = se
        traj["mc_empirical_mean"] = _mean_columns(values)
    if "mc_concat" in cfg.modes:
        rmse, se, means = [], [], []
        for ng in ngs:
            prefix = circuit.prefix(int(ng))
            vals, (r, e) = _mc_columns(prefix, cfg, "mc_concat", None, ideal[ng],
                                       trajectory=False, decomps=decomps[: int(ng)])
            rmse.append(r[0])
            se.append(e[0])
            means.append(_mean_columns(vals)[0])
        cols["rmse_mc_concat"] = rmse
        cols["rmse_mc_concat_se"] = se
        traj["mc_concat_mean"] = means
    eps_gate = gate_error_probability(circuit.steps[0].noise[0]) if n_max else 0.0
    if pauli:
        cols["prop1"] = [noqem_dynamic_range(cfg.eps / 3, g) for g in ngs]
        cols["prop2"] = [noqem_error_upper(cfg.eps, g) for g in ngs]
    else:
        cols["prop2"] = [noqem_error_upper(eps_gate, g) for g in ngs]
    cols["prop3"] = [qem_rmse_bound_general(1, g, cfg.ns) for g in ngs]
    if pauli:
        cols["prop4"] = [qem_rmse_bound_pauli(1, g, cfg.ns, cfg.eps) for g in ngs]
        cols["conjecture"] = [qem_rmse_conjecture(cfg.eps, g, cfg.ns) for g in ngs]
        traj["prop1_envelope"] = cols["prop1"]
    tables = {cfg.experiment: _table(cols)}
    if cfg.experiment.endswith("_rx"):
        tables[f"{cfg.experiment}_trajectory"] = _table(traj)
    return tables


def exp_bloch_x(cfg: ExperimentConfig) -> dict:
    """Repeated X gates under depolarizing noise."""
    _expect(cfg, "bloch_x")
    return _bloch_tables(cfg)


def exp_bloch_rx(cfg: ExperimentConfig) -> dict:
    """Repeated ``Rx(theta)`` gates under depolarizing noise, with trajectory table."""
    _expect(cfg, "bloch_rx")
    return _bloch_tables(cfg)


def exp_amp_damp(cfg: ExperimentConfig) -> dict:
    """Repeated X or ``Rx(theta)`` gates under amplitude damping."""
    _expect(cfg, "amp_damp_x", "amp_damp_rx")
    return _bloch_tables(cfg)


def _expect(cfg, *names):
    if cfg.experiment not in names:
        raise ValueError(f"config is for {cfg.experiment!r}, expected one of {names}")


def exp_qaoa_mud(cfg: ExperimentConfig, instance: MudInstance | None = None,
                 summary: dict | None = None) -> dict:
    """RMSE against the number of QAOA stages, and a per-stage trajectory.

    When ``summary`` is given it receives the instance and gate-count metadata.
    """
    _expect(cfg, "qaoa_mud")
    if instance is None:
        instance = make_mud_instance(cfg.n_users, cfg.n_antennas, cfg.snr_db,
                                     np.random.default_rng(cfg.seed))
    obs = build_mud_observable(instance)
    n = cfg.n_users
    rows = {k: [] for k in ("P", "N_G", "noiseless", "noisy")}
    extra = {}
    info = {}
    for p in sorted(set(int(v) for v in cfg.p_list)):
        circuit = build_qaoa_circuit(obs, p, n, cfg.eps, cfg.noise_model)
        ideal = run_noiseless(circuit)
        noisy = run_noisy(circuit)
        rows["P"].append(p)
        rows["N_G"].append(circuit.n_gates)
        rows["noiseless"].append(ideal)
        rows["noisy"].append(noisy)
        decomps = decompose_circuit(circuit)
        if "noqem" in cfg.modes:
            extra.setdefault("rmse_noqem", []).append(abs(noisy - ideal))
        if "exact_qem" in cfg.modes:
            extra.setdefault("rmse_exact_qem", []).append(abs(run_exact_qem(circuit, decomps) - ideal))
        if "mc_empirical" in cfg.modes:
            extra.setdefault("rmse_mc_empirical_analytic", []).append(
                moment_recursion_pauli(circuit, cfg.ns).rmse
            )
            _, (r, e) = _mc_columns(circuit, cfg, "mc_empirical", None, ideal,
                                    trajectory=False, decomps=decomps)
            extra.setdefault("rmse_mc_empirical", []).append(r[0])
            extra.setdefault("rmse_mc_empirical_se", []).append(e[0])
        if "mc_concat" in cfg.modes:
            _, (r, e) = _mc_columns(circuit, cfg, "mc_concat", None, ideal,
                                    trajectory=False, decomps=decomps)
            extra.setdefault("rmse_mc_concat", []).append(r[0])
            extra.setdefault("rmse_mc_concat_se", []).append(e[0])
        eps_u = max(gate_error_probability(ch) for ch in circuit.channels) if p else 0.0
        extra.setdefault("prop3", []).append(qem_rmse_bound_general(n, circuit.n_gates, cfg.ns))
        extra.setdefault("prop4", []).append(qem_rmse_bound_pauli(n, circuit.n_gates, cfg.ns, eps_u))
        info = circuit.meta
    tables = {"qaoa_mud_rmse": _table({**rows, **extra})}
    traj, traj_info = qaoa_trajectory(cfg, obs)
    tables["qaoa_mud_trajectory"] = traj
    if summary is None:
        summary = {}
    summary.update(
        gates_per_stage=info.get("gates_per_stage"),
        layers_per_stage=traj_info["layers_per_stage"],
        mud_optimum=mud_optimum(obs),
        x_true=instance.x_true.tolist(),
        Z_norm=instance.Z_norm,
        noise_var=instance.noise_var,
    )
    return tables


def qaoa_trajectory(cfg: ExperimentConfig, obs: Observable) -> tuple[Table, dict]:
    """Objective after every stage of a ``cfg.traj_p``-stage run, per mode."""
    p = cfg.traj_p
    circuit = build_qaoa_circuit(obs, p, obs.n, cfg.eps, cfg.noise_model)
    marks = np.array(circuit.marks)
    ideal = run_noiseless(circuit, trajectory=True)[marks]
    noisy = run_noisy(circuit, trajectory=True)[marks]
    decomps = decompose_circuit(circuit)
    layers = circuit.meta["layers_per_stage"] or 0
    stages = np.arange(p + 1)
    cols = {"stage": stages, "noiseless": ideal}
    if "noqem" in cfg.modes:
        cols["noqem"] = noisy
    if "exact_qem" in cfg.modes:
        cols["exact_qem"] = run_exact_qem(circuit, decomps, trajectory=True)[marks]
    if "mc_empirical" in cfg.modes:
        values = mc_trials(circuit, cfg.ns, cfg.trials, cfg.seed, decomps=decomps,
                           trajectory=True, workers=cfg.workers)[:, marks]
        cols["mc_empirical_mean"] = _mean_columns(values)
    cols["prop1_envelope"] = [noqem_dynamic_range(cfg.eps / 3, k * layers) for k in stages]
    return _table(cols), dict(layers_per_stage=layers, gates=circuit.n_gates)


def emit_bounds_table(cfg: ExperimentConfig) -> Table:
    """Every bound on the grid ``ng_list x eps_list`` at ``n = 1``."""
    rows = []
    for eps in cfg.eps_list:
        for ng in cfg.ng_list:
            rows.append([
                1, ng, cfg.ns, eps,
                noqem_dynamic_range(eps / 3, ng),
                noqem_error_upper(eps, ng),
                qem_rmse_bound_general(1, ng, cfg.ns),
                qem_rmse_bound_pauli(1, ng, cfg.ns, eps),
                qem_rmse_conjecture(eps, ng, cfg.ns),
            ])
    columns = ("n", "N_G", "Ns", "eps", "prop1", "prop2", "prop3", "prop4", "conjecture")
    return Table(columns, np.array(rows, dtype=float))


def conjecture_report(cfg: ExperimentConfig) -> tuple[Table, dict]:
    """Empirical and analytic RMSE of repeated-X circuits against the conjectured bound.

    Informational: reports the fraction of grid points where the RMSE exceeds
    ``sqrt(exp(eps N_G / Ns) - 1)``.
    """
    ngs = np.array(sorted(set(int(v) for v in cfg.ng_list if v >= 1)))
    rows = []
    for eps in cfg.eps_list:
        circuit = repeated_gate_circuit(X_PTM, depolarizing(eps), int(ngs.max()))
        ideal = run_noiseless(circuit, trajectory=True)[ngs]
        analytic = moment_recursion_pauli(circuit, cfg.ns).rmse_by_step[ngs]
        _, (emp, se) = _mc_columns(circuit, cfg, "mc_empirical", ngs, ideal)
        conj = np.array([qem_rmse_conjecture(eps, g, cfg.ns) for g in ngs])
        for row in zip(ngs, analytic, emp, se, conj):
            rows.append([eps, *row, float(row[2] > row[4]), float(row[1] > row[4])])
    columns = ("eps", "N_G", "rmse_analytic", "rmse_empirical", "rmse_empirical_se",
               "conjecture", "violated_empirical", "violated_analytic")
    table = Table(columns, np.array(rows, dtype=float))
    summary = dict(
        points=len(rows),
        violation_fraction_empirical=float(table.column("violated_empirical").mean()),
        violation_fraction_analytic=float(table.column("violated_analytic").mean()),
    )
    return table, summary


# ---------------------------------------------------------------- driver


def run_experiment(cfg: ExperimentConfig) -> tuple[dict, dict]:
    """Run one experiment; write CSVs and ``manifest.json`` when ``out_path`` is set."""
    start = time.perf_counter()
    summary: dict = {}
    if cfg.experiment in ("bloch_x", "bloch_rx", "amp_damp_x", "amp_damp_rx"):
        tables = _bloch_tables(cfg)
    elif cfg.experiment == "qaoa_mud":
        tables = exp_qaoa_mud(cfg, summary=summary)
    else:
        tables = {"bounds_table": emit_bounds_table(cfg)}
        conj, summary = conjecture_report(cfg)
        tables["conjecture_report"] = conj
    elapsed = time.perf_counter() - start
    manifest = build_manifest(cfg, tables, summary, elapsed)
    if cfg.out_path:
        write_outputs(Path(cfg.out_path), tables, manifest)
    return tables, manifest


def build_manifest(cfg, tables, summary, elapsed) -> dict:
    return dict(
        experiment=cfg.experiment,
        config=cfg.to_dict(),
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
        versions=dict(qemlab=__version__, numpy=np.__version__, python=platform.python_version()),
        files=[f"{name}.csv" for name in tables],
        summary=summary,
        timing_seconds=elapsed,
    )


def write_outputs(out: Path, tables: dict, manifest: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, table in tables.items():
        (out / f"{name}.csv").write_text(table.to_csv())
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=list) + "\n")
