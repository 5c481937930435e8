"""Chebyshev tapers and the equiripple resolution model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal.windows import chebwin

__all__ = [
    "TaperSpec",
    "WeightGrid",
    "chebyshev_1d",
    "chebyshev_2d",
    "half_mainlobe_width",
    "resolution",
]


@dataclass(frozen=True)
class TaperSpec:
    """Sidelobe attenuation target in dB; the amplitude ratio is derived from it."""

    sidelobe_attenuation_db: float

    def __post_init__(self) -> None:
        if not self.sidelobe_attenuation_db > 0:
            raise ValueError("sidelobe attenuation must be positive dB")

    @property
    def sidelobe_ratio(self) -> float:
        return 10.0 ** (-self.sidelobe_attenuation_db / 20.0)


@dataclass(frozen=True)
class WeightGrid:
    """Square grid of beamforming weights tied to an element spacing (wavelengths)."""

    values: np.ndarray
    spacing: float

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"weight grid must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("weight grid contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n_1d(self) -> int:
        return self.values.shape[0]


def chebyshev_1d(n: int, spec: TaperSpec) -> np.ndarray:
    """Dolph-Chebyshev taper of length n, normalized to unit sum.

    The zero-padded spectrum of the result has equiripple sidelobes at the
    requested attenuation below the mainlobe.
    """
    if n < 2:
        raise ValueError(f"taper length must be at least 2, got {n}")
    w = chebwin(n, at=spec.sidelobe_attenuation_db)
    return w / w.sum()


def chebyshev_2d(n: int, spec: TaperSpec, spacing: float = 0.5) -> WeightGrid:
    """Separable 2D Chebyshev taper (outer product), unit total sum."""
    w = chebyshev_1d(n, spec)
    return WeightGrid(values=np.outer(w, w), spacing=spacing)


def half_mainlobe_width(n_1d: int, spec: TaperSpec) -> float:
    """Half main-lobe width (radians) of the equiripple response of n_1d elements."""
    if n_1d < 2:
        raise ValueError(f"n_1d must be at least 2, got {n_1d}")
    r = spec.sidelobe_ratio
    return math.acos(1.0 / math.cosh(math.acosh(1.0 / r) / (n_1d - 1)))


def resolution(omega: float) -> float:
    """Angular resolution in NAF units: the half-width scaled by the 0.5 NAF limit."""
    return 0.5 * omega
