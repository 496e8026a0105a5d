"""Shared builders for randomized small problem instances."""

import numpy as np

from coopaoa import ApConfig, ArrayGeometry, Scene, build_grid, build_qubo, synthesize


def random_small_instance(seed, num_aps=None, num_bins=None, num_elements=4,
                          gamma=None, mu=None, max_paths=4):
    """Random scene + QUBO on a small grid; returns everything a test needs.

    Rotations, regularizers, path counts and noise all vary with the seed.
    """
    rng = np.random.default_rng(seed)
    num_aps = num_aps if num_aps is not None else int(rng.integers(1, 4))
    num_bins = num_bins if num_bins is not None else int(rng.choice([8, 16]))
    gamma = gamma if gamma is not None else float(rng.uniform(0.05, 2.0))
    mu = mu if mu is not None else float(rng.uniform(0.0, 2.0))
    grid = build_grid(ArrayGeometry(num_elements, 0.5), num_bins, -90.0, 90.0)
    aps = tuple(
        ApConfig(float(rng.uniform(-360.0, 360.0)), int(rng.integers(1, max_paths + 1)))
        for _ in range(num_aps)
    )
    scene = Scene(
        aps=aps,
        source_bearing_deg=float(rng.uniform(-180.0, 180.0)),
        snr_db=float(rng.uniform(-5.0, 20.0)),
        seed=int(rng.integers(0, 2**31)),
        on_grid=bool(rng.integers(0, 2)),
    )
    snapshots = synthesize(scene, grid)
    orientations = [ap.orientation_deg for ap in aps]
    problem = build_qubo(snapshots, grid, orientations, gamma, mu)
    return problem, snapshots, grid, orientations, gamma, mu


def random_states(rng, num, k):
    return rng.integers(0, 2, size=(num, k)).astype(np.int8)
