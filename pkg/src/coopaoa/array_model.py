"""Uniform linear array model: steering vectors, angular grid, rotation shifts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _round_half_away(x: float) -> int:
    "Round to nearest integer, halves away from zero."
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True)
class ArrayGeometry:
    "M-element uniform linear array; spacing given as d/lambda."

    num_elements: int = 8
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.num_elements < 2:
            raise ValueError("num_elements must be >= 2")
        if not self.spacing_over_wavelength > 0:
            raise ValueError("spacing_over_wavelength must be positive")


def steering_vector(geometry: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Array response to a planar wavefront from angle theta off broadside.

    Element m carries phase -2*pi*(d/lambda)*m*sin(theta); element 0 is 1.
    """
    m = np.arange(geometry.num_elements)
    phase = (
        -2.0
        * np.pi
        * geometry.spacing_over_wavelength
        * m
        * math.sin(math.radians(theta_deg))
    )
    return np.exp(1j * phase)


@dataclass(frozen=True)
class SteeringGrid:
    """Angular search grid with its precomputed manifold matrix.

    Bin k maps to theta_min + k*delta with delta = span/num_bins; the upper
    bound is exclusive, and shift arithmetic wraps circularly mod num_bins.
    Column k of ``manifold`` is the steering vector at bin k, so every column
    has squared norm num_elements exactly (unit-modulus entries).
    """

    geometry: ArrayGeometry
    num_bins: int
    theta_min_deg: float
    theta_max_deg: float
    manifold: np.ndarray = field(repr=False)

    @property
    def delta_deg(self) -> float:
        "Grid resolution in degrees."
        return (self.theta_max_deg - self.theta_min_deg) / self.num_bins

    @property
    def span_deg(self) -> float:
        return self.theta_max_deg - self.theta_min_deg

    @property
    def angles_deg(self) -> np.ndarray:
        return self.theta_min_deg + self.delta_deg * np.arange(self.num_bins)

    def angle_of_bin(self, k: int) -> float:
        return self.theta_min_deg + self.delta_deg * (k % self.num_bins)

    def wrap_angle(self, theta_deg: float) -> float:
        "Wrap an angle into [theta_min, theta_max)."
        return self.theta_min_deg + (theta_deg - self.theta_min_deg) % self.span_deg

    def bin_of_angle(self, theta_deg: float) -> int:
        "Nearest grid bin (round half away from zero, circular)."
        k = _round_half_away((self.wrap_angle(theta_deg) - self.theta_min_deg) / self.delta_deg)
        return k % self.num_bins


def build_grid(
    geometry: ArrayGeometry,
    num_bins: int = 720,
    theta_min_deg: float = -90.0,
    theta_max_deg: float = 90.0,
) -> SteeringGrid:
    "Construct a SteeringGrid; default is 720 bins over [-90, 90) (0.25 deg)."
    if num_bins < 2:
        raise ValueError("num_bins must be >= 2")
    if not theta_min_deg < theta_max_deg:
        raise ValueError("theta_min_deg must be below theta_max_deg")
    delta = (theta_max_deg - theta_min_deg) / num_bins
    angles = theta_min_deg + delta * np.arange(num_bins)
    m = np.arange(geometry.num_elements)[:, None]
    phase = (
        -2.0
        * np.pi
        * geometry.spacing_over_wavelength
        * m
        * np.sin(np.deg2rad(angles))[None, :]
    )
    manifold = np.exp(1j * phase)
    return SteeringGrid(geometry, num_bins, theta_min_deg, theta_max_deg, manifold)


@dataclass(frozen=True)
class RotationShift:
    "Orientation difference between two APs expressed as a circular bin shift."

    angle_deg: float
    bins: int
    num_bins: int


def rotation_shift(alpha_deg: float, grid: SteeringGrid) -> RotationShift:
    "Bin shift for a rotation by alpha degrees: round(alpha/delta) mod num_bins."
    bins = _round_half_away(alpha_deg / grid.delta_deg) % grid.num_bins
    return RotationShift(alpha_deg, bins, grid.num_bins)


def aligned_index(q_bin: int, shift: RotationShift) -> int:
    """Bin of AP p aligned with ``q_bin`` of AP q under shift(phi_p - phi_q).

    With local AoAs theta_p = beta - phi_p, an on-grid far-field source at
    bearing beta satisfies bin(theta_q) = (bin(theta_p) + shift.bins) mod N,
    so this returns (q_bin - shift.bins) mod N.
    """
    if not 0 <= q_bin < shift.num_bins:
        raise ValueError(f"bin {q_bin} out of range [0, {shift.num_bins})")
    return (q_bin - shift.bins) % shift.num_bins
