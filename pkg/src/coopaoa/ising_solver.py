"""Annealed MCMC minimization of QUBO energies.

Two modes: textbook sequential Metropolis simulated annealing, and a
parallel-trial variant that tests every candidate flip per step against a
shared dynamic escape offset, picks uniformly among the accepted ones, and
grows the offset whenever nothing is accepted. Hot loops are numba-compiled;
an exhaustive Gray-code brute-force solver is provided as the verification
oracle for small instances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .qubo_builder import QuboProblem, qubo_energy

MODES = ("sequential", "parallel_trial")
SCHEDULES = ("geometric",)

BRUTE_FORCE_MAX_VARS = 26


@dataclass(frozen=True)
class AnnealConfig:
    "Schedule and restart parameters; defaults clear the K<=20 exact bar."

    sweeps: int = 2000
    t_initial: float = 10.0
    t_final: float = 0.05
    schedule: str = "geometric"
    restarts: int = 8
    mode: str = "sequential"
    offset_increment: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not (self.t_initial >= self.t_final > 0):
            raise ValueError("need t_initial >= t_final > 0")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.offset_increment < 0:
            raise ValueError("offset_increment must be nonnegative")


@dataclass
class SolveResult:
    """Best state found, its exact energy, and the winning restart's trace.

    ``energy_trace`` has one row (sweep, current_energy, best_energy) per
    sweep; the best column is non-increasing. ``flips_accepted`` counts
    accepted flips over all restarts.
    """

    best_state: np.ndarray = field(repr=False)
    best_energy: float
    energy_trace: np.ndarray = field(repr=False)
    restart_index: int
    flips_accepted: int


def temperature_schedule(config: AnnealConfig) -> np.ndarray:
    "Geometric interpolation from t_initial down to t_final over the sweeps."
    if config.sweeps == 1:
        return np.array([config.t_initial])
    ratio = config.t_final / config.t_initial
    exponents = np.arange(config.sweeps) / (config.sweeps - 1)
    return config.t_initial * ratio**exponents


def local_fields(problem: QuboProblem, state: np.ndarray) -> np.ndarray:
    """l_i = b_i + 2*sum_j W_ij x_j; flipping bit i changes the energy by
    -(1 - 2 x_i) * l_i."""
    x = np.asarray(state, dtype=np.float64)
    if x.shape != (problem.num_vars,):
        raise ValueError("state length mismatch")
    xs = x.reshape(problem.num_aps, problem.num_bins)
    fields = problem.b + 2.0 * (xs @ problem.intra_block).ravel()
    pairs = problem.alignment_pairs
    if pairs.size:
        np.add.at(fields, pairs[:, 0], 2.0 * problem.mu * x[pairs[:, 1]])
        np.add.at(fields, pairs[:, 1], 2.0 * problem.mu * x[pairs[:, 0]])
    return fields


@njit(cache=True)
def _init_fields(b, block, pptr, pidx, mu, n_bins, x):
    k = b.shape[0]
    fields = b.copy()
    num_aps = k // n_bins
    for p in range(num_aps):
        base = p * n_bins
        for h in range(n_bins):
            acc = 0.0
            for h2 in range(n_bins):
                if x[base + h2] == 1:
                    acc += block[h, h2]
            fields[base + h] += 2.0 * acc
    for i in range(k):
        acc = 0.0
        for t in range(pptr[i], pptr[i + 1]):
            if x[pidx[t]] == 1:
                acc += 1.0
        fields[i] += 2.0 * mu * acc
    return fields


@njit(cache=True)
def _energy_from_fields(b, fields, x):
    # x^T W x = sum_i x_i (l_i - b_i) / 2, so E = -sum_i x_i (b_i + l_i) / 2
    e = 0.0
    for i in range(x.shape[0]):
        if x[i] == 1:
            e -= 0.5 * (b[i] + fields[i])
    return e


@njit(cache=True)
def _apply_flip(block, pptr, pidx, mu, n_bins, x, fields, i):
    delta = 1 - 2 * x[i]
    x[i] = 1 - x[i]
    coef = 2.0 * delta
    base = (i // n_bins) * n_bins
    h = i - base
    for h2 in range(n_bins):
        fields[base + h2] += coef * block[h, h2]
    cm = coef * mu
    for t in range(pptr[i], pptr[i + 1]):
        fields[pidx[t]] += cm


@njit(cache=True)
def _run_sequential(b, block, pptr, pidx, mu, n_bins, x, temps, seed):
    np.random.seed(seed)
    k = b.shape[0]
    fields = _init_fields(b, block, pptr, pidx, mu, n_bins, x)
    energy = _energy_from_fields(b, fields, x)
    best_energy = energy
    best_x = x.copy()
    n_sweeps = temps.shape[0]
    cur_trace = np.empty(n_sweeps)
    best_trace = np.empty(n_sweeps)
    accepted = 0
    for s in range(n_sweeps):
        temp = temps[s]
        order = np.random.permutation(k)
        for t in range(k):
            i = order[t]
            d_e = -(1.0 - 2.0 * x[i]) * fields[i]
            ok = False
            if d_e <= 0.0:
                ok = True
            elif d_e < 50.0 * temp and np.random.random() < np.exp(-d_e / temp):
                ok = True
            if ok:
                _apply_flip(block, pptr, pidx, mu, n_bins, x, fields, i)
                energy += d_e
                accepted += 1
                if energy < best_energy:
                    best_energy = energy
                    best_x[:] = x
        cur_trace[s] = energy
        best_trace[s] = best_energy
    return best_x, best_energy, cur_trace, best_trace, accepted, x, fields


@njit(cache=True)
def _run_parallel_trial(b, block, pptr, pidx, mu, n_bins, x, temps, offset_inc, seed):
    np.random.seed(seed)
    k = b.shape[0]
    fields = _init_fields(b, block, pptr, pidx, mu, n_bins, x)
    energy = _energy_from_fields(b, fields, x)
    best_energy = energy
    best_x = x.copy()
    n_sweeps = temps.shape[0]
    cur_trace = np.empty(n_sweeps)
    best_trace = np.empty(n_sweeps)
    accepted = 0
    e_off = 0.0
    cand = np.empty(k, dtype=np.int64)
    for s in range(n_sweeps):
        temp = temps[s]
        n_acc = 0
        for i in range(k):
            eff = -(1.0 - 2.0 * x[i]) * fields[i] - e_off
            if eff <= 0.0:
                cand[n_acc] = i
                n_acc += 1
            elif eff < 50.0 * temp and np.random.random() < np.exp(-eff / temp):
                cand[n_acc] = i
                n_acc += 1
        if n_acc > 0:
            i = cand[np.random.randint(0, n_acc)]
            d_e = -(1.0 - 2.0 * x[i]) * fields[i]
            _apply_flip(block, pptr, pidx, mu, n_bins, x, fields, i)
            energy += d_e
            accepted += 1
            e_off = 0.0
            if energy < best_energy:
                best_energy = energy
                best_x[:] = x
        else:
            e_off += offset_inc
        cur_trace[s] = energy
        best_trace[s] = best_energy
    return best_x, best_energy, cur_trace, best_trace, accepted, x, fields


def anneal(
    problem: QuboProblem, config: AnnealConfig, verify_fields: bool = False
) -> SolveResult:
    """Run the configured annealer over all restarts and keep the best state.

    Restart 0 starts from all zeros (the sparse prior), later restarts from
    uniform random bits. Deterministic under (problem, config, seed); the
    returned best_energy is recomputed exactly from the best state.
    """
    temps = temperature_schedule(config)
    pptr, pidx = problem.partner_csr
    args = (problem.b, problem.intra_block, pptr, pidx, problem.mu, problem.num_bins)
    seed_root = np.random.SeedSequence(config.seed)
    children = seed_root.spawn(config.restarts)

    best = None
    total_accepted = 0
    for r, child in enumerate(children):
        kernel_seed = int(child.generate_state(1)[0])
        rng = np.random.default_rng(child)
        if r == 0:
            x0 = np.zeros(problem.num_vars, dtype=np.int8)
        else:
            x0 = rng.integers(0, 2, problem.num_vars, dtype=np.int8)
        if config.mode == "sequential":
            out = _run_sequential(*args, x0, temps, kernel_seed)
        else:
            out = _run_parallel_trial(
                *args, x0, temps, config.offset_increment, kernel_seed
            )
        best_x, best_e, cur_trace, best_trace, accepted, x_final, fields_final = out
        total_accepted += int(accepted)
        if verify_fields:
            fresh = local_fields(problem, x_final)
            drift = float(np.max(np.abs(fresh - fields_final)))
            if drift > 1e-8:
                raise AssertionError(f"local-field drift {drift} exceeds 1e-8")
        if best is None or best_e < best[1]:
            trace = np.column_stack([np.arange(len(temps)), cur_trace, best_trace])
            best = (best_x, best_e, trace, r)

    best_x, _, trace, restart_index = best
    return SolveResult(
        best_state=best_x,
        best_energy=qubo_energy(problem, best_x),
        energy_trace=trace,
        restart_index=restart_index,
        flips_accepted=total_accepted,
    )


@njit(cache=True)
def _brute_kernel(b, block, pptr, pidx, mu, n_bins, k):
    x = np.zeros(k, dtype=np.int8)
    fields = b.copy()
    energy = 0.0
    best_energy = 0.0
    best_x = x.copy()
    total = 1 << k
    for step in range(1, total):
        # binary-reflected Gray code flips bit ctz(step) at this step
        i = 0
        s = step
        while s & 1 == 0:
            s >>= 1
            i += 1
        d_e = -(1.0 - 2.0 * x[i]) * fields[i]
        _apply_flip(block, pptr, pidx, mu, n_bins, x, fields, i)
        energy += d_e
        if energy < best_energy:
            best_energy = energy
            best_x[:] = x
        elif energy == best_energy:
            for j in range(k):
                if x[j] != best_x[j]:
                    if x[j] < best_x[j]:
                        best_x[:] = x
                    break
    return best_x, best_energy


def brute_force(problem: QuboProblem) -> tuple[np.ndarray, float]:
    """Exact global minimum by Gray-code enumeration of all 2^K states.

    Refuses K > 26. Ties resolved toward the lexicographically smallest bit
    vector (state read as a binary integer, bit 0 most significant). The
    returned energy is recomputed exactly for the winning state.
    """
    k = problem.num_vars
    if k > BRUTE_FORCE_MAX_VARS:
        raise ValueError(f"brute force refuses K={k} > {BRUTE_FORCE_MAX_VARS}")
    pptr, pidx = problem.partner_csr
    best_x, _ = _brute_kernel(
        problem.b, problem.intra_block, pptr, pidx, problem.mu, problem.num_bins, k
    )
    return best_x, qubo_energy(problem, best_x)


def write_trace_csv(result: SolveResult, path: str | Path) -> None:
    "Energy trace as CSV (sweep, current_energy, best_energy)."
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep", "current_energy", "best_energy"])
        for sweep, cur, best in result.energy_trace:
            writer.writerow([int(sweep), repr(float(cur)), repr(float(best))])
