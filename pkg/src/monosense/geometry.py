"""Uniform rectangular array layouts and the virtual sum co-array of a Tx/Rx pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConstraintError",
    "ArrayGeometry",
    "ArrayPair",
    "SumCoArray",
    "make_ura",
    "validate_pair",
    "sum_coarray",
    "coarray_dims",
]

_RATIO_TOL = 1e-9


class ConstraintError(ValueError):
    """A Tx/Rx pairing violates the hole-free co-array spacing constraints."""


@dataclass(frozen=True)
class ArrayGeometry:
    """Square URA on a corner-anchored lattice.

    Element (i, j) sits at (i * spacing, j * spacing); coordinates are in
    wavelengths and the element order is row-major over (i, j).
    """

    n_1d: int
    spacing: float

    def __post_init__(self) -> None:
        if int(self.n_1d) != self.n_1d or self.n_1d < 1:
            raise ValueError(f"n_1d must be a positive integer, got {self.n_1d!r}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")

    @property
    def n_elements(self) -> int:
        return self.n_1d**2

    @property
    def aperture(self) -> float:
        """Corner-to-corner extent along one axis, in wavelengths."""
        return self.spacing * (self.n_1d - 1)

    @property
    def positions(self) -> np.ndarray:
        """(N, 2) array of (x, z) element coordinates in wavelengths."""
        idx = np.arange(self.n_1d, dtype=float)
        xx, zz = np.meshgrid(idx, idx, indexing="ij")
        return np.column_stack((xx.ravel(), zz.ravel())) * self.spacing


@dataclass(frozen=True)
class ArrayPair:
    """A communications (Tx) array paired with a sensing (Rx) array.

    The sensing spacing must be an integer multiple of the comms spacing and
    small enough that the sum co-array has no holes.
    """

    comms: ArrayGeometry
    sensing: ArrayGeometry

    def __post_init__(self) -> None:
        ratio = self.sensing.spacing / self.comms.spacing
        m = round(ratio)
        if m < 1 or abs(ratio - m) > _RATIO_TOL:
            raise ConstraintError(
                "sensing spacing must be an integer multiple of comms spacing; "
                f"got ratio {ratio:.6g}"
            )
        if self.sensing.spacing > self.comms.spacing * self.comms.n_1d + _RATIO_TOL:
            raise ConstraintError(
                "sensing spacing exceeds comms aperture plus one step; "
                "the sum co-array would have holes "
                f"({self.sensing.spacing:.6g} > {self.comms.spacing * self.comms.n_1d:.6g})"
            )

    @property
    def spacing_ratio(self) -> int:
        """Integer ratio sensing.spacing / comms.spacing."""
        return round(self.sensing.spacing / self.comms.spacing)


@dataclass(frozen=True)
class SumCoArray:
    """Virtual array of all pairwise Tx+Rx position sums, with multiplicities."""

    spacing: float
    n_1d: int
    multiplicity: np.ndarray

    @property
    def geometry(self) -> ArrayGeometry:
        """The co-array as a plain URA (multiplicities dropped)."""
        return ArrayGeometry(self.n_1d, self.spacing)


def make_ura(n_1d: int, spacing: float) -> ArrayGeometry:
    """Create a square URA with ``n_1d`` elements per side, spacing in wavelengths."""
    return ArrayGeometry(n_1d=n_1d, spacing=spacing)


def validate_pair(comms: ArrayGeometry, sensing: ArrayGeometry) -> ArrayPair:
    """Check the co-array spacing constraints and return the validated pair.

    Raises ConstraintError when the spacing ratio is not a positive integer or
    when the sensing array is so sparse that the co-array would have holes.
    """
    return ArrayPair(comms=comms, sensing=sensing)


def sum_coarray(pair: ArrayPair) -> SumCoArray:
    """Enumerate all pairwise position sums and bin them to the co-array lattice.

    This is the brute-force construction: every one of the
    N_comms * N_sensing element combinations is counted at its lattice cell.
    """
    spacing = min(pair.comms.spacing, pair.sensing.spacing)
    sums = pair.comms.positions[:, None, :] + pair.sensing.positions[None, :, :]
    idx = np.rint(sums / spacing).astype(np.intp).reshape(-1, 2)
    n_1d = int(idx.max()) + 1
    multiplicity = np.zeros((n_1d, n_1d), dtype=np.int64)
    np.add.at(multiplicity, (idx[:, 0], idx[:, 1]), 1)
    if (multiplicity < 1).any():
        raise ConstraintError("sum co-array has holes despite pair validation")
    return SumCoArray(spacing=spacing, n_1d=n_1d, multiplicity=multiplicity)


def coarray_dims(pair: ArrayPair) -> tuple[float, int]:
    """Closed-form co-array spacing and per-side element count.

    The count is the joint aperture measured in co-array spacings, plus one
    for the corner element; it must agree with the brute-force enumeration.
    """
    spacing = min(pair.comms.spacing, pair.sensing.spacing)
    aperture = pair.comms.aperture + pair.sensing.aperture
    n_1d = round(aperture / spacing) + 1
    return spacing, n_1d
