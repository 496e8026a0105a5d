import math

import numpy as np
import pytest

from coopaoa import (
    AnnealConfig,
    ApConfig,
    ArrayGeometry,
    L1Config,
    Scene,
    brute_force,
    build_grid,
    build_qubo,
    decode_caim,
    estimate_aim,
    estimate_caim,
    estimate_l1,
    lasso_ista,
    synthesize,
)
from coopaoa.scene_sim import Snapshot

FAST_ANNEAL = AnnealConfig(sweeps=500, restarts=4, seed=0)


def noiseless_scene(orientations, num_bins=48, num_paths=1, num_elements=8):
    grid = build_grid(ArrayGeometry(num_elements, 0.5), num_bins, -90.0, 90.0)
    scene = Scene(
        aps=tuple(ApConfig(o, num_paths) for o in orientations),
        snr_db=math.inf,
        seed=21,
    )
    return grid, synthesize(scene, grid)


def truth_state(snaps, problem):
    x = np.zeros(problem.num_vars, dtype=np.int8)
    for p, snap in enumerate(snaps):
        x[p * problem.num_bins + snap.los_bin] = 1
    return x


def test_decode_correct_state_full_votes():
    grid, snaps = noiseless_scene((120.0, 225.0, 200.0))
    orients = [s.orientation_deg for s in snaps]
    problem = build_qubo(snaps, grid, orients, 1.0, 1.0)
    estimates = decode_caim(truth_state(snaps, problem), problem, snaps, grid)
    for est, snap in zip(estimates, snaps):
        assert est.los_bin == snap.los_bin
        assert est.los_angle_deg == pytest.approx(snap.truth[0][0])
        assert list(est.alignment_votes) == [2]
        assert est.refit_amplitudes[0] == pytest.approx(snap.truth[0][1])


def test_decode_single_ap_amplitude_rule():
    grid, snaps = noiseless_scene((30.0,))
    problem = build_qubo(snaps, grid, [30.0], 1.0, 0.0)
    x = np.zeros(problem.num_vars, dtype=np.int8)
    x[snaps[0].los_bin] = 1
    x[(snaps[0].los_bin + 7) % grid.num_bins] = 1  # spurious weak bin
    (est,) = decode_caim(x, problem, snaps, grid)
    assert list(est.alignment_votes) == [0, 0]
    assert est.los_bin == snaps[0].los_bin  # largest refit amplitude wins


def test_decode_all_zero_solution_flagged():
    grid, snaps = noiseless_scene((10.0, 40.0))
    orients = [s.orientation_deg for s in snaps]
    problem = build_qubo(snaps, grid, orients, 1.0, 1.0)
    estimates = decode_caim(
        np.zeros(problem.num_vars, dtype=np.int8), problem, snaps, grid
    )
    for est in estimates:
        assert est.empty
        assert est.los_bin is None and est.los_angle_deg is None
        assert len(est.detected_bins) == 0


def test_decode_invariant_to_ap_permutation():
    grid, snaps = noiseless_scene((120.0, 225.0, 200.0), num_paths=2)
    orients = [s.orientation_deg for s in snaps]
    problem = build_qubo(snaps, grid, orients, 1.0, 1.0)
    x = truth_state(snaps, problem)
    base = decode_caim(x, problem, snaps, grid)
    perm = [2, 0, 1]
    snaps_p = [snaps[i] for i in perm]
    problem_p = build_qubo(snaps_p, grid, [orients[i] for i in perm], 1.0, 1.0)
    x_p = truth_state(snaps_p, problem_p)
    permuted = decode_caim(x_p, problem_p, snaps_p, grid)
    for out_idx, in_idx in enumerate(perm):
        assert permuted[out_idx].los_bin == base[in_idx].los_bin
        assert list(permuted[out_idx].alignment_votes) == list(
            base[in_idx].alignment_votes
        )


def test_estimate_aim_exact_on_reduced_grid():
    # small grid keeps K brute-forceable: the optimum is the single true bit
    grid, snaps = noiseless_scene((25.0,), num_bins=12, num_elements=8)
    problem = build_qubo(snaps, grid, [25.0], 1.0, 0.0)
    best_state, _ = brute_force(problem)
    expected = np.zeros(12, dtype=np.int8)
    expected[snaps[0].los_bin] = 1
    assert np.array_equal(best_state, expected)
    (est,) = estimate_aim(snaps, grid, 1.0, FAST_ANNEAL)
    assert est.los_bin == snaps[0].los_bin


def test_estimate_aim_pure_noise_nonempty_support():
    grid = build_grid(ArrayGeometry(8, 0.5), 48, -90.0, 90.0)
    rng = np.random.default_rng(0)
    y = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    snap = Snapshot(3.0 * y, ((0.0, 0.0j),), None, 0.0)
    (est,) = estimate_aim([snap], grid, 5.0, FAST_ANNEAL)
    assert len(est.detected_bins) > 0


def test_aim_caim_consistency_mu_zero_block_decomposition():
    grid, snaps = noiseless_scene((10.0, -35.0), num_bins=8, num_elements=4)
    orients = [s.orientation_deg for s in snaps]
    joint = build_qubo(snaps, grid, orients, 1.0, 0.0)
    joint_state, joint_energy = brute_force(joint)
    blockwise = np.zeros(0, dtype=np.int8)
    total = 0.0
    for p, snap in enumerate(snaps):
        sub = build_qubo([snap], grid, [orients[p]], 1.0, 0.0)
        state, energy = brute_force(sub)
        blockwise = np.concatenate([blockwise, state])
        total += energy
    assert np.array_equal(joint_state, blockwise)
    assert joint_energy == pytest.approx(total, rel=1e-12)


def test_estimate_caim_noiseless_pipeline():
    grid, snaps = noiseless_scene((120.0, 225.0, 200.0), num_bins=60)
    estimates, problem, result = estimate_caim(snaps, grid, 1.0, 1.0, FAST_ANNEAL)
    for est, snap in zip(estimates, snaps):
        assert est.los_bin == snap.los_bin
        assert list(est.alignment_votes) == [2]


def test_l1_zero_observation_gives_zero():
    grid = build_grid(ArrayGeometry(8, 0.5), 64, -90.0, 90.0)
    s, objectives, converged = lasso_ista(
        np.zeros(8, dtype=complex), grid.manifold, L1Config(lam=0.5)
    )
    assert not s.any()
    assert converged


def test_l1_null_threshold_exact():
    grid, snaps = noiseless_scene((40.0,), num_bins=64)
    y = snaps[0].received
    lam_star = float(np.max(np.abs(grid.manifold.conj().T @ y)))
    s, _, _ = lasso_ista(y, grid.manifold, L1Config(lam=lam_star, max_iters=50))
    assert not s.any()
    s, _, _ = lasso_ista(y, grid.manifold, L1Config(lam=2 * lam_star, max_iters=50))
    assert not s.any()


def test_l1_single_path_dominant_coefficient():
    grid, snaps = noiseless_scene((40.0,), num_bins=90)
    (est,) = estimate_l1(snaps, grid, L1Config(lam=0.5, max_iters=5000, tol=1e-6))
    assert est.converged
    assert est.los_bin == snaps[0].los_bin


def test_l1_objective_monotone_descent():
    rng = np.random.default_rng(14)
    grid = build_grid(ArrayGeometry(8, 0.5), 64, -90.0, 90.0)
    for _ in range(10):
        y = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        lam = float(rng.uniform(0.05, 2.0))
        _, objectives, _ = lasso_ista(y, grid.manifold, L1Config(lam=lam, max_iters=300))
        diffs = np.diff(objectives)
        assert np.all(diffs <= 1e-12 * (1.0 + np.abs(objectives[:-1])))


def test_l1_nonconvergence_flagged():
    grid, snaps = noiseless_scene((40.0,), num_bins=90)
    (est,) = estimate_l1(snaps, grid, L1Config(lam=0.01, max_iters=2, tol=1e-16))
    assert not est.converged
    assert len(est.detected_bins) > 0


def test_l1_config_validation():
    with pytest.raises(ValueError):
        L1Config(lam=0.0)
    with pytest.raises(ValueError):
        L1Config(max_iters=0)
    with pytest.raises(ValueError):
        L1Config(tol=0.0)
    with pytest.raises(ValueError):
        L1Config(support_ratio=0.0)
