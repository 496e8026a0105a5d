"""Decoding solver output into per-AP AoA estimates, plus the two baselines.

CAIM decodes the cooperative solution with a cross-AP alignment vote: a
detected bin collects one vote per other AP whose support contains the
rotation-aligned bin, and the most-voted bin is declared the line of sight.
AIM solves each AP independently (mu = 0) and falls back to the vote-free
amplitude rule, as does the per-AP l1 baseline ("RoArray-like, simplified").
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .array_model import SteeringGrid
from .ising_solver import AnnealConfig, SolveResult, anneal
from .qubo_builder import QuboProblem, build_qubo
from .scene_sim import Snapshot
from .seeding import derive_seed


@dataclass
class ApEstimate:
    "Detected support of one AP with the selected line-of-sight bin."

    detected_bins: np.ndarray
    detected_angles_deg: np.ndarray
    los_bin: int | None
    los_angle_deg: float | None
    alignment_votes: np.ndarray
    refit_amplitudes: np.ndarray = field(repr=False)
    converged: bool = True

    @property
    def empty(self) -> bool:
        return self.los_bin is None

    def to_dict(self) -> dict:
        return {
            "detected_bins": [int(k) for k in self.detected_bins],
            "detected_angles_deg": [float(a) for a in self.detected_angles_deg],
            "los_bin": None if self.los_bin is None else int(self.los_bin),
            "los_angle_deg": None if self.los_angle_deg is None else float(self.los_angle_deg),
            "alignment_votes": [int(v) for v in self.alignment_votes],
            "refit_amplitudes": [[float(z.real), float(z.imag)] for z in self.refit_amplitudes],
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class L1Config:
    "Proximal-gradient l1 solver parameters."

    lam: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-6
    support_ratio: float = 0.01

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.support_ratio <= 1:
            raise ValueError("support_ratio must be in (0, 1]")


def _refit_amplitudes(y: np.ndarray, grid: SteeringGrid, bins: np.ndarray) -> np.ndarray:
    if len(bins) == 0:
        return np.zeros(0, dtype=complex)
    amps, *_ = np.linalg.lstsq(grid.manifold[:, bins], y, rcond=None)
    return amps


def _select_los(bins: np.ndarray, votes: np.ndarray, amps: np.ndarray) -> int:
    "Most votes, then largest |amplitude|, then lowest bin."
    order = sorted(range(len(bins)), key=lambda k: (-votes[k], -abs(amps[k]), bins[k]))
    return int(bins[order[0]])


def _build_estimate(
    y: np.ndarray,
    grid: SteeringGrid,
    bins: np.ndarray,
    votes: np.ndarray,
    converged: bool = True,
    selection_amps: np.ndarray | None = None,
) -> ApEstimate:
    "selection_amps, when given, drives the amplitude tie-break instead of the refit."
    amps = _refit_amplitudes(y, grid, bins)
    if len(bins) == 0:
        return ApEstimate(bins, np.zeros(0), None, None, votes, amps, converged)
    los_bin = _select_los(bins, votes, amps if selection_amps is None else selection_amps)
    return ApEstimate(
        bins,
        grid.angles_deg[bins],
        los_bin,
        float(grid.angle_of_bin(los_bin)),
        votes,
        amps,
        converged,
    )


def decode_caim(
    solution: np.ndarray,
    problem: QuboProblem,
    snapshots: list[Snapshot],
    grid: SteeringGrid,
) -> list[ApEstimate]:
    """Extract per-AP supports from the joint solution and vote on the LoS.

    Votes come from the problem's alignment pairs, so the decode needs no
    orientation inputs. An AP with empty support is flagged (los_bin None).
    """
    x = np.asarray(solution)
    if x.shape != (problem.num_vars,):
        raise ValueError("solution length mismatch")
    if len(snapshots) != problem.num_aps:
        raise ValueError("snapshot count does not match the problem")
    pptr, pidx = problem.partner_csr
    estimates = []
    for p, snap in enumerate(snapshots):
        base = p * problem.num_bins
        bins = np.flatnonzero(x[base : base + problem.num_bins]).astype(np.int64)
        votes = np.zeros(len(bins), dtype=np.int64)
        for k, h in enumerate(bins):
            i = base + int(h)
            partners = pidx[pptr[i] : pptr[i + 1]]
            votes[k] = int(np.sum(x[partners] == 1))
        estimates.append(_build_estimate(np.asarray(snap.received), grid, bins, votes))
    return estimates


def estimate_caim(
    snapshots: list[Snapshot],
    grid: SteeringGrid,
    gamma: float,
    mu: float,
    config: AnnealConfig,
) -> tuple[list[ApEstimate], QuboProblem, SolveResult]:
    "Full cooperative pipeline: build the joint QUBO, anneal, decode."
    orientations = [s.orientation_deg for s in snapshots]
    problem = build_qubo(snapshots, grid, orientations, gamma, mu)
    result = anneal(problem, config)
    return decode_caim(result.best_state, problem, snapshots, grid), problem, result


def aim_solve(
    snapshots: list[Snapshot],
    grid: SteeringGrid,
    gamma: float,
    config: AnnealConfig,
) -> list[tuple[QuboProblem, SolveResult]]:
    "Independent mu = 0 solve per AP, with per-AP derived seeds."
    out = []
    for p, snap in enumerate(snapshots):
        problem = build_qubo([snap], grid, [snap.orientation_deg], gamma, mu=0.0)
        cfg = replace(config, seed=derive_seed(config.seed, p))
        out.append((problem, anneal(problem, cfg)))
    return out


def estimate_aim(
    snapshots: list[Snapshot],
    grid: SteeringGrid,
    gamma: float,
    config: AnnealConfig,
) -> list[ApEstimate]:
    "Independent per-AP estimation: mu = 0 QUBO per AP, vote-free decode."
    estimates = []
    for (problem, result), snap in zip(
        aim_solve(snapshots, grid, gamma, config), snapshots
    ):
        estimates.extend(decode_caim(result.best_state, problem, [snap], grid))
    return estimates


def _lipschitz(psi: np.ndarray) -> float:
    """Upper bound on the largest eigenvalue of Psi^H Psi.

    Power iteration on the small M x M Gram, then rounded up to the next
    power of two: a power-of-two step keeps the descent regime and makes
    the soft-threshold comparison scale exactly (so the null-threshold
    property lam >= ||Psi^H y||_inf => s = 0 holds bit-exactly).
    """
    small = psi @ psi.conj().T
    v = np.ones(small.shape[0], dtype=complex)
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(500):
        w = small @ v
        new_value = float(np.vdot(v, w).real)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 1.0
        v = w / norm
        if abs(new_value - value) <= 1e-14 * max(1.0, abs(new_value)):
            value = new_value
            break
        value = new_value
    return float(2.0 ** np.ceil(np.log2(value * (1.0 + 1e-6))))


def _soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    mag = np.abs(z)
    scale = np.maximum(1.0 - t / np.maximum(mag, 1e-300), 0.0)
    return z * scale


def lasso_ista(
    y: np.ndarray, psi: np.ndarray, config: L1Config
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Proximal-gradient descent on 0.5*||y - Psi s||^2 + lam*||s||_1.

    Complex soft-thresholding with step 1/L; starts from zero, so
    lam >= ||Psi^H y||_inf yields s = 0 exactly. Returns (s, per-iteration
    objective values including the start, converged flag).
    """
    lip = _lipschitz(psi)
    step = 1.0 / lip
    s = np.zeros(psi.shape[1], dtype=complex)
    objectives = [0.5 * float(np.vdot(y, y).real)]
    converged = False
    for _ in range(config.max_iters):
        residual = psi @ s - y
        grad = psi.conj().T @ residual
        s = _soft_threshold(s - step * grad, config.lam * step)
        residual = psi @ s - y
        obj = 0.5 * float(np.vdot(residual, residual).real) + config.lam * float(
            np.sum(np.abs(s))
        )
        objectives.append(obj)
        if abs(objectives[-2] - obj) <= config.tol * max(1.0, abs(objectives[-2])):
            converged = True
            break
    return s, np.array(objectives), converged


def estimate_l1(
    snapshots: list[Snapshot], grid: SteeringGrid, config: L1Config
) -> list[ApEstimate]:
    """Per-AP l1 sparse recovery baseline (RoArray-like, simplified).

    Support is every bin with |s| above support_ratio * max|s|; the LoS is
    the support bin with the largest sparse-solution magnitude (the refit is
    ill-conditioned on smeared supports). Non-convergence returns the last
    iterate with the estimate flagged.
    """
    estimates = []
    for snap in snapshots:
        y = np.asarray(snap.received)
        s, _, converged = lasso_ista(y, grid.manifold, config)
        mags = np.abs(s)
        peak = float(mags.max()) if len(mags) else 0.0
        if peak > 0.0:
            bins = np.flatnonzero(mags > config.support_ratio * peak).astype(np.int64)
        else:
            bins = np.zeros(0, dtype=np.int64)
        votes = np.zeros(len(bins), dtype=np.int64)
        estimates.append(
            _build_estimate(y, grid, bins, votes, converged, selection_amps=s[bins])
        )
    return estimates
