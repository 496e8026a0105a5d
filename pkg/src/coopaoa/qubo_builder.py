"""Assembly of the cooperative sparse-recovery objective into QUBO form.

The cooperative objective over per-AP binary support vectors x_p is

    sum_p ( ||x_p||_0 + gamma * ||y_p - Psi x_p||^2 ) + mu * g(X, X_rot)

where g is the pairwise Hamming distance between each AP's support and every
other AP's circularly rotated support. This module builds the equivalent
energy E(x) = -b.x - x^T W x (offset apart), with

    b_i   = -(1 + gamma*G[h,h] - 2*gamma*Re{(Psi^H y_p)[h]} + (P-1)*mu)
    W_ij  = -gamma*G[h,h']   for i != j inside one AP block
    W_ij  = +mu              on cross-AP alignment pairs, else 0

with G = Re{Psi^H Psi} and i = p*N + h. Replacing the complex Gram by its
real part is exact for binary x because conjugate ordered pairs cancel the
imaginary parts. ``objective_value`` evaluates the original objective
directly, with no QUBO matrices, as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .array_model import SteeringGrid, rotation_shift
from .scene_sim import Snapshot

QUBO_FORMAT_HEADER = "# coopaoa qubo v1"


@dataclass(frozen=True)
class IndexMap:
    "Bijection between flat indices [0, P*N) and (ap, bin) pairs."

    num_aps: int
    num_bins: int

    @property
    def size(self) -> int:
        return self.num_aps * self.num_bins

    def flat(self, ap: int, h: int) -> int:
        return ap * self.num_bins + h

    def split(self, i: int) -> tuple[int, int]:
        return divmod(i, self.num_bins)


def pair_shifts(orientations_deg, grid: SteeringGrid) -> dict[tuple[int, int], int]:
    "Bin shift n for every AP pair p<q, from the orientation difference."
    shifts = {}
    for p in range(len(orientations_deg)):
        for q in range(p + 1, len(orientations_deg)):
            alpha = orientations_deg[p] - orientations_deg[q]
            shifts[(p, q)] = rotation_shift(alpha, grid).bins
    return shifts


def build_alignment_pairs(orientations_deg, grid: SteeringGrid) -> np.ndarray:
    """Flat-index pairs coupled by the alignment penalty, one row per pair.

    For APs p<q with shift n, bin h of p pairs with bin (h+n) mod N of q;
    exactly N pairs per AP pair and none inside a single block.
    """
    n_bins = grid.num_bins
    shifts = pair_shifts(orientations_deg, grid)
    rows = []
    h = np.arange(n_bins)
    for (p, q), n in shifts.items():
        i = p * n_bins + h
        j = q * n_bins + (h + n) % n_bins
        rows.append(np.column_stack([i, j]))
    if not rows:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(rows).astype(np.int64)


@dataclass(frozen=True)
class QuboProblem:
    """Immutable QUBO instance with block-structured coupling storage.

    ``intra_block`` is the symmetric zero-diagonal N x N coupling shared by
    every AP block; cross-AP couplings are +mu on ``alignment_pairs`` and 0
    elsewhere. ``offset`` is gamma * sum_p ||y_p||^2, so that
    qubo_energy(x) + offset equals the original objective for every binary x.
    """

    b: np.ndarray = field(repr=False)
    intra_block: np.ndarray = field(repr=False)
    alignment_pairs: np.ndarray = field(repr=False)
    gamma: float
    mu: float
    offset: float
    num_aps: int
    num_bins: int

    def __post_init__(self):
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        block = np.ascontiguousarray(self.intra_block, dtype=np.float64)
        pairs = np.ascontiguousarray(self.alignment_pairs, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "intra_block", block)
        object.__setattr__(self, "alignment_pairs", pairs)
        if b.shape != (self.num_aps * self.num_bins,):
            raise ValueError("b has wrong length")
        if block.shape != (self.num_bins, self.num_bins):
            raise ValueError("intra_block has wrong shape")
        if not np.array_equal(block, block.T):
            raise ValueError("intra_block must be symmetric")
        if np.any(np.diag(block) != 0.0):
            raise ValueError("intra_block diagonal must be zero")
        if pairs.size:
            if pairs.min() < 0 or pairs.max() >= self.num_vars:
                raise ValueError("alignment pair index out of range")
            if np.any(pairs[:, 0] // self.num_bins == pairs[:, 1] // self.num_bins):
                raise ValueError("alignment pairs must connect different AP blocks")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")

    @property
    def num_vars(self) -> int:
        return self.num_aps * self.num_bins

    @property
    def index_map(self) -> IndexMap:
        return IndexMap(self.num_aps, self.num_bins)

    @cached_property
    def partner_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR adjacency (indptr, indices) of the alignment pairs, both directions.

        partner_csr[1][indptr[i]:indptr[i+1]] lists the flat indices coupled
        to i with weight +mu.
        """
        k = self.num_vars
        counts = np.zeros(k, dtype=np.int64)
        pairs = self.alignment_pairs
        if pairs.size:
            np.add.at(counts, pairs[:, 0], 1)
            np.add.at(counts, pairs[:, 1], 1)
        indptr = np.zeros(k + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        cursor = indptr[:-1].copy()
        for i, j in pairs:
            indices[cursor[i]] = j
            cursor[i] += 1
            indices[cursor[j]] = i
            cursor[j] += 1
        return indptr, indices

    def dense_w(self, max_vars: int = 512) -> np.ndarray:
        "Materialize the full symmetric W matrix (small instances only)."
        if self.num_vars > max_vars:
            raise ValueError(f"refusing to densify K={self.num_vars} > {max_vars}")
        w = np.zeros((self.num_vars, self.num_vars))
        n = self.num_bins
        for p in range(self.num_aps):
            w[p * n : (p + 1) * n, p * n : (p + 1) * n] = self.intra_block
        for i, j in self.alignment_pairs:
            w[i, j] = self.mu
            w[j, i] = self.mu
        return w

    def save_text(self, path: str | Path) -> None:
        "Write the documented sparse text format (see README)."
        lines = [QUBO_FORMAT_HEADER]
        lines.append(f"K {self.num_vars}")
        lines.append(f"P {self.num_aps}")
        lines.append(f"N_r {self.num_bins}")
        lines.append(f"gamma {self.gamma!r}")
        lines.append(f"mu {self.mu!r}")
        lines.append(f"offset {self.offset!r}")
        for i, v in enumerate(self.b):
            lines.append(f"b {i} {float(v)!r}")
        n = self.num_bins
        for p in range(self.num_aps):
            for h in range(n):
                for h2 in range(h + 1, n):
                    v = self.intra_block[h, h2]
                    if v != 0.0:
                        lines.append(f"W {p * n + h} {p * n + h2} {float(v)!r}")
        for i, j in self.alignment_pairs:
            a, c = (int(i), int(j)) if i < j else (int(j), int(i))
            lines.append(f"W {a} {c} {self.mu!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load_text(cls, path: str | Path) -> "QuboProblem":
        "Reload a problem written by save_text, bit-exactly."
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0] != QUBO_FORMAT_HEADER:
            raise ValueError("not a coopaoa qubo text file")
        header: dict[str, str] = {}
        idx = 1
        while idx < len(lines) and not lines[idx].startswith(("b ", "W ")):
            key, value = lines[idx].split(maxsplit=1)
            header[key] = value
            idx += 1
        num_aps = int(header["P"])
        num_bins = int(header["N_r"])
        k = int(header["K"])
        if k != num_aps * num_bins:
            raise ValueError("header K inconsistent with P * N_r")
        gamma = float(header["gamma"])
        mu = float(header["mu"])
        offset = float(header["offset"])
        b = np.zeros(k)
        blocks = np.zeros((num_aps, num_bins, num_bins))
        pairs = []
        for line in lines[idx:]:
            if not line:
                continue
            parts = line.split()
            if parts[0] == "b":
                b[int(parts[1])] = float(parts[2])
            elif parts[0] == "W":
                i, j, v = int(parts[1]), int(parts[2]), float(parts[3])
                p, h = divmod(i, num_bins)
                q, h2 = divmod(j, num_bins)
                if p == q:
                    blocks[p, h, h2] = v
                    blocks[p, h2, h] = v
                else:
                    if v != mu:
                        raise ValueError("cross-AP entry differs from mu")
                    pairs.append((i, j))
            else:
                raise ValueError(f"unrecognized line: {line!r}")
        for p in range(1, num_aps):
            if not np.array_equal(blocks[p], blocks[0]):
                raise ValueError("intra-AP blocks differ between APs")
        pairs_arr = (
            np.array(sorted(pairs), dtype=np.int64)
            if pairs
            else np.empty((0, 2), dtype=np.int64)
        )
        return cls(
            b=b,
            intra_block=blocks[0],
            alignment_pairs=pairs_arr,
            gamma=gamma,
            mu=mu,
            offset=offset,
            num_aps=num_aps,
            num_bins=num_bins,
        )


def _stack_received(snapshots: list[Snapshot], grid: SteeringGrid) -> np.ndarray:
    m = grid.geometry.num_elements
    ys = []
    for snap in snapshots:
        y = np.asarray(snap.received)
        if y.shape != (m,):
            raise ValueError("snapshot length does not match grid geometry")
        ys.append(y)
    return np.array(ys)


def build_qubo(
    snapshots: list[Snapshot],
    grid: SteeringGrid,
    orientations_deg,
    gamma: float = 1.0,
    mu: float = 1.0,
) -> QuboProblem:
    "Assemble bias, couplings and offset from per-AP snapshots."
    if len(snapshots) != len(orientations_deg):
        raise ValueError("need one orientation per snapshot")
    ys = _stack_received(snapshots, grid)
    num_aps = len(snapshots)
    psi = grid.manifold
    gram = (psi.conj().T @ psi).real
    gram = 0.5 * (gram + gram.T)
    proj = (psi.conj().T @ ys.T).real.T  # (P, N) of Re{Psi^H y_p}

    diag = np.diag(gram)
    b = -(1.0 + gamma * diag[None, :] - 2.0 * gamma * proj + (num_aps - 1) * mu)
    intra_block = -gamma * gram
    np.fill_diagonal(intra_block, 0.0)
    offset = gamma * float(np.sum(np.abs(ys) ** 2))
    pairs = build_alignment_pairs(orientations_deg, grid)
    return QuboProblem(
        b=b.ravel(),
        intra_block=intra_block,
        alignment_pairs=pairs,
        gamma=float(gamma),
        mu=float(mu),
        offset=offset,
        num_aps=num_aps,
        num_bins=grid.num_bins,
    )


def _check_state(problem: QuboProblem, state: np.ndarray) -> np.ndarray:
    x = np.asarray(state)
    if x.shape != (problem.num_vars,):
        raise ValueError(f"state length {x.shape} != {problem.num_vars}")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("state entries must be 0 or 1")
    return x.astype(np.float64)


def qubo_energy(problem: QuboProblem, state: np.ndarray) -> float:
    "E(x) = -b.x - x^T W x, the double sum running over all ordered pairs."
    x = _check_state(problem, state)
    xs = x.reshape(problem.num_aps, problem.num_bins)
    energy = -float(problem.b @ x)
    energy -= float(np.einsum("ph,hk,pk->", xs, problem.intra_block, xs))
    pairs = problem.alignment_pairs
    if pairs.size:
        energy -= 2.0 * problem.mu * float(x[pairs[:, 0]] @ x[pairs[:, 1]])
    return energy


def penalty_g(states, shifts: dict[tuple[int, int], int]) -> int:
    """Pairwise misalignment count: sum over AP pairs of the Hamming distance
    between x_p and the rotated x_q (rotated[i] = x_q[(i + n) mod N])."""
    total = 0
    for (p, q), n in shifts.items():
        xp = np.asarray(states[p])
        xq_rot = np.roll(np.asarray(states[q]), -n)
        total += int(np.sum(xp != xq_rot))
    return total


def objective_value(
    snapshots: list[Snapshot],
    grid: SteeringGrid,
    orientations_deg,
    gamma: float,
    mu: float,
    state: np.ndarray,
) -> float:
    "Direct evaluation of the cooperative objective; no QUBO matrices involved."
    num_aps = len(snapshots)
    x = np.asarray(state)
    if x.shape != (num_aps * grid.num_bins,):
        raise ValueError("state length does not match snapshots and grid")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("state entries must be 0 or 1")
    xs = x.reshape(num_aps, grid.num_bins)
    total = 0.0
    for p, snap in enumerate(snapshots):
        residual = np.asarray(snap.received) - grid.manifold @ xs[p].astype(np.float64)
        total += float(np.sum(xs[p])) + gamma * float(np.vdot(residual, residual).real)
    total += mu * penalty_g(list(xs), pair_shifts(orientations_deg, grid))
    return total
