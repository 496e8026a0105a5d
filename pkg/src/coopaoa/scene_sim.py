"""Synthetic multipath scene generation and received-signal synthesis.

Stands in for a full channel simulator: one line-of-sight path per AP plus
independent reflections with geometrically decaying power. Fully seeded and
reproducible; snapshots can be exported to / reloaded from JSON for replay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .array_model import SteeringGrid, aligned_index, rotation_shift, steering_vector

SNAPSHOT_SCHEMA_VERSION = 1

# tolerance for deciding an angle already sits on a grid point
_GRID_EPS = 1e-9


@dataclass(frozen=True)
class ApConfig:
    "One access point: array orientation in the global frame and path count."

    orientation_deg: float
    num_paths: int = 16

    def __post_init__(self):
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1 (path 0 is the LoS)")


@dataclass(frozen=True)
class Scene:
    """Ground-truth description of one simulated environment.

    ``power_decay`` sets reflection powers rho**c relative to the LoS.
    ``random_los_phase`` draws a uniform random phase for the LoS gain
    instead of the default coherent (unit) gain; see README for why the
    coherent convention is the default.
    """

    aps: tuple[ApConfig, ...]
    source_bearing_deg: float = 0.0
    snr_db: float = 0.0
    seed: int = 0
    on_grid: bool = True
    power_decay: float = 0.5
    random_los_phase: bool = False

    def __post_init__(self):
        if len(self.aps) < 1:
            raise ValueError("scene needs at least one AP")
        if not 0 < self.power_decay:
            raise ValueError("power_decay must be positive")
        object.__setattr__(self, "aps", tuple(self.aps))

    @property
    def num_aps(self) -> int:
        return len(self.aps)


@dataclass(frozen=True)
class Snapshot:
    """Per-AP received vector with its ground truth.

    ``truth`` lists (angle_deg, complex gain) pairs, LoS first. ``los_bin``
    is set only for on-grid scenes. The received vector equals the sum of
    steering vectors weighted by the truth gains, plus noise.
    """

    received: np.ndarray
    truth: tuple[tuple[float, complex], ...]
    los_bin: int | None
    orientation_deg: float


def _path_angle(raw_deg: float, grid: SteeringGrid, on_grid: bool, rng) -> float:
    "Wrap into the grid span; snap to the grid on-grid, else jitter off grid points."
    theta = grid.wrap_angle(raw_deg)
    if on_grid:
        return grid.angle_of_bin(grid.bin_of_angle(theta))
    frac = (theta - grid.theta_min_deg) / grid.delta_deg
    if abs(frac - round(frac)) < _GRID_EPS:
        theta = grid.wrap_angle(theta + rng.uniform(-0.5, 0.5) * grid.delta_deg)
    return theta


def synthesize(scene: Scene, grid: SteeringGrid) -> list[Snapshot]:
    """Generate one received vector per AP.

    LoS angle of AP p is wrap(beta - phi_p); reflections get independent
    uniform angles over the grid span and complex Gaussian gains with power
    power_decay**c. Noise is i.i.d. circular complex Gaussian per element
    with variance |s_los|^2 / 10**(snr_db/10). Deterministic under the
    scene seed.
    """
    rng = np.random.default_rng(scene.seed)
    m_elem = grid.geometry.num_elements
    snapshots = []
    for ap in scene.aps:
        theta_los = _path_angle(
            scene.source_bearing_deg - ap.orientation_deg, grid, scene.on_grid, rng
        )
        if scene.random_los_phase:
            s_los = complex(np.exp(1j * rng.uniform(0.0, 2.0 * np.pi)))
        else:
            s_los = 1.0 + 0.0j
        truth = [(theta_los, s_los)]
        for c in range(1, ap.num_paths):
            if scene.on_grid:
                theta_c = grid.angle_of_bin(int(rng.integers(grid.num_bins)))
            else:
                theta_c = rng.uniform(grid.theta_min_deg, grid.theta_max_deg)
            power = scene.power_decay**c * abs(s_los) ** 2
            gain = np.sqrt(power / 2.0) * complex(*rng.standard_normal(2))
            truth.append((float(theta_c), complex(gain)))

        received = np.zeros(m_elem, dtype=complex)
        for theta_c, gain in truth:
            received += steering_vector(grid.geometry, theta_c) * gain
        if np.isfinite(scene.snr_db):
            sigma2 = abs(s_los) ** 2 / 10.0 ** (scene.snr_db / 10.0)
            noise = np.sqrt(sigma2 / 2.0) * (
                rng.standard_normal(m_elem) + 1j * rng.standard_normal(m_elem)
            )
            received = received + noise

        los_bin = grid.bin_of_angle(theta_los) if scene.on_grid else None
        snapshots.append(
            Snapshot(received, tuple(truth), los_bin, ap.orientation_deg)
        )
    return snapshots


@dataclass(frozen=True)
class AlignmentRow:
    "LoS bins of one AP pair and whether the rotation-shift relation holds."

    ap_p: int
    ap_q: int
    los_bin_p: int
    los_bin_q: int
    shift_bins: int
    aligned: bool


def ground_truth_alignment(
    snapshots: list[Snapshot], grid: SteeringGrid
) -> list[AlignmentRow]:
    "Aligned LoS bin table for every AP pair; on-grid scenes only."
    if any(s.los_bin is None for s in snapshots):
        raise ValueError("ground-truth alignment unavailable for off-grid scenes")
    rows = []
    for p in range(len(snapshots)):
        for q in range(p + 1, len(snapshots)):
            shift = rotation_shift(
                snapshots[p].orientation_deg - snapshots[q].orientation_deg, grid
            )
            aligned = aligned_index(snapshots[q].los_bin, shift) == snapshots[p].los_bin
            rows.append(
                AlignmentRow(
                    p, q, snapshots[p].los_bin, snapshots[q].los_bin, shift.bins, aligned
                )
            )
    return rows


def scene_for_num_aps(scene: Scene, num_aps: int) -> Scene:
    "Restrict a scene template to its first num_aps access points."
    if not 1 <= num_aps <= scene.num_aps:
        raise ValueError(f"num_aps must be in [1, {scene.num_aps}]")
    return replace(scene, aps=scene.aps[:num_aps])


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def snapshot_to_dict(snapshot: Snapshot) -> dict:
    "JSON-ready snapshot layout; complex numbers as [re, im] pairs."
    return {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "orientation_deg": snapshot.orientation_deg,
        "received": [_complex_pair(z) for z in snapshot.received],
        "truth": [
            {"angle_deg": angle, "gain": _complex_pair(gain)}
            for angle, gain in snapshot.truth
        ],
        "los_bin": snapshot.los_bin,
    }


def snapshot_from_dict(data: dict) -> Snapshot:
    received = np.array([complex(re, im) for re, im in data["received"]])
    truth = tuple(
        (float(t["angle_deg"]), complex(t["gain"][0], t["gain"][1]))
        for t in data["truth"]
    )
    los_bin = data["los_bin"]
    return Snapshot(
        received,
        truth,
        None if los_bin is None else int(los_bin),
        float(data["orientation_deg"]),
    )


def save_snapshots(snapshots: list[Snapshot], out_dir: str | Path) -> list[Path]:
    "Write one snapshot_ap<k>.json per AP; returns the written paths."
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, snap in enumerate(snapshots):
        path = out / f"snapshot_ap{k}.json"
        path.write_text(json.dumps(snapshot_to_dict(snap), sort_keys=True, indent=1))
        paths.append(path)
    return paths


def load_snapshots(in_dir: str | Path) -> list[Snapshot]:
    "Load snapshot_ap<k>.json files written by save_snapshots, in AP order."
    paths = sorted(
        Path(in_dir).glob("snapshot_ap*.json"), key=lambda p: int(p.stem[len("snapshot_ap"):])
    )
    if not paths:
        raise FileNotFoundError(f"no snapshot_ap*.json files in {in_dir}")
    return [snapshot_from_dict(json.loads(p.read_text())) for p in paths]
