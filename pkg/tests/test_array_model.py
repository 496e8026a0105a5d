import numpy as np
import pytest

from coopaoa import (
    ArrayGeometry,
    aligned_index,
    build_grid,
    rotation_shift,
    steering_vector,
)
from coopaoa.array_model import RotationShift


def test_steering_vector_broadside_is_all_ones():
    vec = steering_vector(ArrayGeometry(8, 0.5), 0.0)
    assert np.allclose(vec, np.ones(8), atol=1e-15)


def test_steering_vector_endfire_two_elements():
    vec = steering_vector(ArrayGeometry(2, 0.5), 90.0)
    assert np.allclose(vec, [1.0, -1.0], atol=1e-12)


def test_steering_vector_30deg_hand_table():
    # phases -pi*m/2 for m=0..3: [1, -j, -1, j]
    vec = steering_vector(ArrayGeometry(4, 0.5), 30.0)
    assert np.allclose(vec, [1.0, -1.0j, -1.0, 1.0j], atol=1e-12)


def test_steering_vector_element_zero_is_one():
    for theta in (-77.3, 0.0, 12.25, 89.9):
        assert steering_vector(ArrayGeometry(5, 0.4), theta)[0] == 1.0


def test_build_grid_default_resolution():
    grid = build_grid(ArrayGeometry(8, 0.5), 720, -90.0, 90.0)
    assert grid.delta_deg == 0.25
    assert grid.manifold.shape == (8, 720)


def test_build_grid_small_bin_angles():
    grid = build_grid(ArrayGeometry(2, 0.5), 4, -90.0, 90.0)
    assert np.allclose(grid.angles_deg, [-90.0, -45.0, 0.0, 45.0])


@pytest.mark.parametrize("num_elements,num_bins", [(2, 4), (8, 720), (5, 33)])
def test_manifold_column_norms(num_elements, num_bins):
    grid = build_grid(ArrayGeometry(num_elements, 0.5), num_bins, -90.0, 90.0)
    norms = np.sum(np.abs(grid.manifold) ** 2, axis=0)
    assert np.max(np.abs(norms - num_elements)) <= 1e-12 * num_elements


def test_build_grid_invalid_arguments():
    with pytest.raises(ValueError):
        build_grid(ArrayGeometry(4, 0.5), 1, -90.0, 90.0)
    with pytest.raises(ValueError):
        build_grid(ArrayGeometry(4, 0.5), 16, 90.0, -90.0)
    with pytest.raises(ValueError):
        ArrayGeometry(1, 0.5)
    with pytest.raises(ValueError):
        ArrayGeometry(4, 0.0)


def test_rotation_shift_cases():
    grid = build_grid(ArrayGeometry(8, 0.5), 720, -90.0, 90.0)
    assert rotation_shift(0.0, grid).bins == 0
    assert rotation_shift(105.0, grid).bins == 420
    assert rotation_shift(-105.0, grid).bins == 300
    assert rotation_shift(180.0, grid).bins == 0


def test_rotation_shift_half_bin_rounds_away_from_zero():
    grid = build_grid(ArrayGeometry(8, 0.5), 720, -90.0, 90.0)
    assert rotation_shift(0.125, grid).bins == 1
    assert rotation_shift(-0.125, grid).bins == 719


def test_aligned_index_identity_and_wrap():
    assert aligned_index(5, RotationShift(0.0, 0, 720)) == 5
    assert aligned_index(0, RotationShift(0.25, 1, 720)) == 719
    with pytest.raises(ValueError):
        aligned_index(720, RotationShift(0.0, 0, 720))


def test_aligned_index_on_grid_scene():
    # beta=0, phi_p=120 -> theta_p=-120 wraps to 60 (bin 600);
    # phi_q=225 -> theta_q=-225 wraps to -45 (bin 180); alpha=-105 -> 300 bins
    grid = build_grid(ArrayGeometry(8, 0.5), 720, -90.0, 90.0)
    bin_p = grid.bin_of_angle(grid.wrap_angle(0.0 - 120.0))
    bin_q = grid.bin_of_angle(grid.wrap_angle(0.0 - 225.0))
    assert (bin_p, bin_q) == (600, 180)
    shift = rotation_shift(120.0 - 225.0, grid)
    assert shift.bins == 300
    assert aligned_index(bin_q, shift) == bin_p
    assert bin_q == (bin_p + shift.bins) % grid.num_bins


def test_aligned_index_bijection_and_inverse():
    grid = build_grid(ArrayGeometry(4, 0.5), 24, -90.0, 90.0)
    rng = np.random.default_rng(7)
    for _ in range(20):
        alpha = float(rng.uniform(-360.0, 360.0))
        fwd = rotation_shift(alpha, grid)
        back = rotation_shift(-alpha, grid)
        images = {aligned_index(q, fwd) for q in range(grid.num_bins)}
        assert images == set(range(grid.num_bins))
        for q in range(grid.num_bins):
            assert aligned_index(aligned_index(q, fwd), back) == q


def test_rotation_shift_additivity_on_grid_multiples():
    grid = build_grid(ArrayGeometry(4, 0.5), 36, -90.0, 90.0)
    rng = np.random.default_rng(3)
    for _ in range(50):
        a1 = float(rng.integers(-720, 720)) * grid.delta_deg
        a2 = float(rng.integers(-720, 720)) * grid.delta_deg
        lhs = rotation_shift(a1 + a2, grid).bins
        rhs = (rotation_shift(a1, grid).bins + rotation_shift(a2, grid).bins) % grid.num_bins
        assert lhs == rhs


def test_wrap_angle_and_bin_of_angle():
    grid = build_grid(ArrayGeometry(8, 0.5), 720, -90.0, 90.0)
    assert grid.wrap_angle(-225.0) == -45.0
    assert grid.wrap_angle(90.0) == -90.0
    assert grid.bin_of_angle(-90.0) == 0
    assert grid.bin_of_angle(89.999999) == 0  # circular: nearest is bin 720 = 0
    assert grid.angle_of_bin(600) == 60.0
