"""Noisy mono-static acquisition of point-scatterer scenes and image reconstruction.

A pixel of the image is the coherent sum over acquisitions of the jointly
beamformed return for one scan direction; the noiseless image is therefore a
superposition of joint point spread functions centered on the targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .angular import NafGrid, NafPoint, steering_matrix
from .beamsynth import AcquisitionSet, effective_weights
from .geometry import ArrayPair
from .windowing import WeightGrid

__all__ = [
    "Scenario",
    "NoiseModel",
    "NafImage",
    "acquire_pixel",
    "reconstruct",
    "point_source_image",
]


@dataclass(frozen=True)
class Scenario:
    """Point scatterers: (NAF position, complex reflection coefficient) pairs."""

    targets: tuple[tuple[NafPoint, complex], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def k(self) -> int:
        return len(self.targets)

    @property
    def positions(self) -> list[NafPoint]:
        return [p for p, _ in self.targets]


@dataclass(frozen=True)
class NoiseModel:
    """Complex circular AWGN per receive-element sample: total variance, plus a seed."""

    variance: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ValueError("noise variance must be non-negative")

    @classmethod
    def from_db(cls, variance_db: float, seed: int = 0) -> "NoiseModel":
        return cls(variance=10.0 ** (variance_db / 10.0), seed=seed)


@dataclass(frozen=True)
class NafImage:
    """Complex reconstruction over a NAF grid, with the setup that produced it."""

    values: np.ndarray
    grid: NafGrid
    pair: ArrayPair
    acq: AcquisitionSet

    def power_db(self, floor: float = 1e-30) -> np.ndarray:
        p = np.abs(self.values) ** 2
        return 10.0 * np.log10(np.maximum(p, floor))


def acquire_pixel(
    pair: ArrayPair,
    acq: AcquisitionSet,
    q: int,
    scenario: Scenario,
    noise: NoiseModel,
    scan: NafPoint,
    rng: np.random.Generator | None = None,
) -> complex:
    """One acquisition's beamformed return for one scan direction.

    Evaluates the bilinear form Rx-weights x Rx-steering x reflection
    coefficients x Tx-steering x Tx-weights at the target directions, plus the
    Rx-beamformed noise; a fresh noise vector is drawn per call.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    ref = min(pair.comms.spacing, pair.sensing.spacing)
    tx = acq.tx_weights[q].values.ravel()
    rx = acq.rx_weights[q].values.ravel()
    a_c_scan = steering_matrix(pair.comms, [scan], ref).entries[:, 0]
    a_s_scan = steering_matrix(pair.sensing, [scan], ref).entries[:, 0]
    w_c = np.conj(a_c_scan) * tx
    w_s = np.conj(a_s_scan) * rx
    signal = 0.0 + 0.0j
    if scenario.k:
        gamma = np.array([c for _, c in scenario.targets], dtype=complex)
        a_s = steering_matrix(pair.sensing, scenario.positions, ref).entries
        a_c = steering_matrix(pair.comms, scenario.positions, ref).entries
        signal = (w_s @ a_s) @ (gamma * (a_c.T @ w_c))
    value = complex(signal)
    if noise.variance > 0:
        n_vec = (
            rng.standard_normal(rx.size) + 1j * rng.standard_normal(rx.size)
        ) * math.sqrt(noise.variance / 2.0)
        value += complex(w_s @ n_vec)
    return value


def _modulated(weights: np.ndarray, source: NafPoint) -> np.ndarray:
    """Co-array weights carrying the source phase and the grid's -0.5 offset."""
    n = weights.shape[0]
    g = np.arange(n)
    gx, gz = g[:, None], g[None, :]
    return (
        weights
        * np.exp(-2j * np.pi * (gx * source.l + gz * source.eta))
        * (-1.0) ** (gx + gz)
    )


def _scan_transform(modulated: np.ndarray, bins: int) -> np.ndarray:
    canvas = np.zeros((bins, bins), dtype=complex)
    n = modulated.shape[0]
    canvas[:n, :n] = modulated
    return np.fft.ifft2(canvas) * (bins * bins)


def point_source_image(weights: WeightGrid, source: NafPoint, grid: NafGrid) -> np.ndarray:
    """Noiseless image of a unit scatterer at ``source`` under co-array ``weights``.

    This is the joint point spread function shifted to the source, evaluated
    at every grid scan direction; the source may lie off-grid.
    """
    w = np.asarray(weights.values, dtype=complex)
    if w.shape[0] > grid.bins_per_axis:
        raise ValueError("grid is coarser than the co-array; increase bins_per_axis")
    return _scan_transform(_modulated(w, source), grid.bins_per_axis)


def reconstruct(
    pair: ArrayPair,
    acq: AcquisitionSet,
    scenario: Scenario,
    noise: NoiseModel,
    grid: NafGrid,
    rng: np.random.Generator | None = None,
    co_weights: WeightGrid | None = None,
) -> NafImage:
    """Image the scenario over the full grid: all acquisitions, all scan directions.

    The signal part superposes the joint point spread function at each target.
    Pixel noise is drawn as one complex Gaussian per scan direction with
    variance noise.variance * (total squared Rx weight norm): because scan
    steering has unit modulus, this equals in distribution the sum over
    acquisitions of the Rx-beamformed per-element noise of ``acquire_pixel``.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    if co_weights is None:
        co_weights = effective_weights(pair, acq)
    w = np.asarray(co_weights.values, dtype=complex)
    b = grid.bins_per_axis
    if w.shape[0] > b:
        raise ValueError("grid is coarser than the co-array; increase bins_per_axis")
    modulated = np.zeros_like(w)
    for position, coeff in scenario.targets:
        modulated += coeff * _modulated(w, position)
    values = _scan_transform(modulated, b)
    if noise.variance > 0:
        pixel_var = noise.variance * acq.noise_enhancement
        values = values + (
            rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
        ) * math.sqrt(pixel_var / 2.0)
    return NafImage(values=values, grid=grid, pair=pair, acq=acq)
