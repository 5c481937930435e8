"""Normalized-angular-frequency (NAF) coordinates, scan grids, and steering.

NAF expresses a direction through the reference element spacing: the vertical
component is spacing * sin(elevation) and the horizontal component is
spacing * sin(azimuth) * cos(elevation).  On a half-wavelength lattice the
domain is the torus [-0.5, 0.5)^2 and every array response is 1-periodic per
axis, so distances and target placements wrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ArrayGeometry

__all__ = [
    "DEFAULT_REFERENCE_SPACING",
    "NafPoint",
    "NafGrid",
    "SteeringMatrix",
    "angles_to_naf",
    "naf_to_angles",
    "steering_matrix",
    "make_grid",
    "oversampled_bins",
    "toroidal_distance",
    "wrap_naf",
]

DEFAULT_REFERENCE_SPACING = 0.5


def wrap_naf(x):
    """Wrap a NAF coordinate (scalar or array) into [-0.5, 0.5)."""
    return (np.asarray(x) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class NafPoint:
    """A direction in NAF coordinates: l horizontal, eta vertical."""

    l: float
    eta: float

    def wrapped(self) -> "NafPoint":
        return NafPoint(float(wrap_naf(self.l)), float(wrap_naf(self.eta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.l, self.eta], dtype=float)


@dataclass(frozen=True)
class NafGrid:
    """Uniform scan grid over [-0.5, 0.5)^2; even bin count so 0 is a grid point."""

    bins_per_axis: int

    def __post_init__(self) -> None:
        if self.bins_per_axis < 2 or self.bins_per_axis % 2 != 0:
            raise ValueError(
                f"bins_per_axis must be a positive even integer, got {self.bins_per_axis!r}"
            )

    @property
    def cell_size(self) -> float:
        return 1.0 / self.bins_per_axis

    @property
    def axis(self) -> np.ndarray:
        """Per-axis coordinates, ascending from -0.5."""
        b = self.bins_per_axis
        return (np.arange(b) - b // 2) / b

    @property
    def points(self) -> np.ndarray:
        """(bins^2, 2) array of (l, eta) points, row-major over (l, eta)."""
        ll, ee = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack((ll.ravel(), ee.ravel()))

    def point_at(self, i: int, j: int) -> NafPoint:
        ax = self.axis
        return NafPoint(float(ax[i]), float(ax[j]))

    def nearest_cell(self, p: NafPoint) -> tuple[int, int]:
        b = self.bins_per_axis
        i = int(round((p.l + 0.5) * b)) % b
        j = int(round((p.eta + 0.5) * b)) % b
        return i, j


@dataclass(frozen=True)
class SteeringMatrix:
    """Unit-modulus steering entries, elements along rows, directions along columns."""

    entries: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def angles_to_naf(phi: float, theta: float, spacing: float) -> NafPoint:
    """Convert elevation/azimuth in radians to NAF at the given spacing."""
    eta = spacing * math.sin(phi)
    l = spacing * math.sin(theta) * math.cos(phi)
    return NafPoint(l, eta)


def naf_to_angles(p: NafPoint, spacing: float) -> tuple[float, float]:
    """Invert the NAF mapping; raises ValueError outside the visible region."""
    s_phi = p.eta / spacing
    s_l = p.l / spacing
    if s_phi**2 + s_l**2 > 1.0 + 1e-12:
        raise ValueError(f"NAF point ({p.l}, {p.eta}) is not a physical direction")
    phi = math.asin(min(1.0, max(-1.0, s_phi)))
    c = math.cos(phi)
    if c < 1e-15:
        return phi, 0.0
    theta = math.asin(min(1.0, max(-1.0, s_l / c)))
    return phi, theta


def _directions_array(directions) -> np.ndarray:
    if isinstance(directions, np.ndarray):
        d = np.atleast_2d(directions.astype(float))
    else:
        d = np.array([[p.l, p.eta] for p in directions], dtype=float)
    if d.ndim != 2 or d.shape[1] != 2 or d.shape[0] == 0:
        raise ValueError("directions must be a non-empty list of NAF points")
    return d


def steering_matrix(
    geom: ArrayGeometry,
    directions: Sequence[NafPoint] | np.ndarray,
    reference_spacing: float = DEFAULT_REFERENCE_SPACING,
) -> SteeringMatrix:
    """Steering matrix of ``geom`` for NAF directions in the reference frame.

    Entry (n, k) is exp(-2j*pi*(x_n*l_k + z_n*eta_k)/reference_spacing) with
    element coordinates in wavelengths; the column at the NAF origin is all
    ones.
    """
    dirs = _directions_array(directions)
    phase = geom.positions @ dirs.T / reference_spacing
    return SteeringMatrix(np.exp(-2j * np.pi * phase))


def make_grid(bins_per_axis: int) -> NafGrid:
    """Uniform NAF grid; bin count must be even so the origin is sampled."""
    return NafGrid(bins_per_axis=bins_per_axis)


def oversampled_bins(n_1d: int, factor: int = 8) -> int:
    """Default grid size for a co-array of the given side length (rounded even)."""
    bins = factor * n_1d
    return bins + (bins % 2)


def toroidal_distance(a: NafPoint, b: NafPoint) -> float:
    """Euclidean distance on the NAF torus (per-axis wrap modulo 1)."""
    dl = abs(a.l - b.l) % 1.0
    de = abs(a.eta - b.eta) % 1.0
    dl = min(dl, 1.0 - dl)
    de = min(de, 1.0 - de)
    return math.hypot(dl, de)
