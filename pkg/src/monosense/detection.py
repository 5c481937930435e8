"""CFAR thresholding, peak refinement, successive target cancellation, matching.

The detector is a 2D cell-averaging CFAR whose training ring wraps around the
NAF torus, followed by per-axis parabolic peak refinement and least-squares
subtraction of the fitted point spread function so that weaker targets masked
by a stronger neighbor become detectable in later passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import label, maximum_position, uniform_filter

from .angular import NafPoint, toroidal_distance, wrap_naf
from .beamsynth import AcquisitionSet, effective_weights
from .geometry import ArrayPair, coarray_dims
from .imaging import NafImage, Scenario, point_source_image
from .windowing import TaperSpec, WeightGrid, half_mainlobe_width, resolution

__all__ = [
    "CfarConfig",
    "Detection",
    "MatchCounts",
    "auto_cfar_config",
    "cfar_mask",
    "cfar_detect",
    "refine_peak",
    "cancel_target",
    "detect_all",
    "match_truth",
]


@dataclass(frozen=True)
class CfarConfig:
    """Cell-averaging CFAR parameters; the training ring lies beyond the guard box."""

    desired_pfa: float
    guard_cells: int
    training_cells: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.desired_pfa < 1.0:
            raise ValueError("desired_pfa must lie in (0, 1)")
        if self.guard_cells < 0:
            raise ValueError("guard_cells must be non-negative")
        if self.training_cells < 1:
            raise ValueError("training_cells must be at least 1")

    @property
    def window_half(self) -> int:
        return self.guard_cells + self.training_cells

    @property
    def training_count(self) -> int:
        return (2 * self.window_half + 1) ** 2 - (2 * self.guard_cells + 1) ** 2

    @property
    def threshold_factor(self) -> float:
        """Scale on the ring-average power holding the per-cell false-alarm rate."""
        n_t = self.training_count
        return n_t * (self.desired_pfa ** (-1.0 / n_t) - 1.0)


def auto_cfar_config(
    bins_per_axis: int, mainlobe_half_width: float, desired_pfa: float
) -> CfarConfig:
    """Guard box sized to the mainlobe half-width (NAF), one-cell training ring."""
    guard = math.ceil(mainlobe_half_width * bins_per_axis)
    guard = min(guard, (bins_per_axis - 3) // 2 - 1)
    return CfarConfig(desired_pfa=desired_pfa, guard_cells=max(guard, 1))


@dataclass(frozen=True)
class Detection:
    """One detected scatterer: refined position, fitted complex amplitude."""

    position: NafPoint
    power: float
    amplitude: complex


class MatchCounts(NamedTuple):
    hits: int
    misses: int
    false_alarms: int


def cfar_mask(image: NafImage, cfg: CfarConfig) -> np.ndarray:
    """Boolean grid of cells whose power exceeds the locally scaled ring average."""
    power = np.abs(image.values) ** 2
    b = power.shape[0]
    if b <= 2 * cfg.window_half + 1:
        raise ValueError(
            f"grid of {b} cells per axis is too small for a CFAR window of "
            f"{2 * cfg.window_half + 1}"
        )
    big = 2 * cfg.window_half + 1
    small = 2 * cfg.guard_cells + 1
    ring_sum = uniform_filter(power, size=big, mode="wrap") * big**2
    ring_sum -= uniform_filter(power, size=small, mode="wrap") * small**2
    ring_mean = ring_sum / cfg.training_count
    return power > cfg.threshold_factor * ring_mean


def _merge_wrapped_labels(labels: np.ndarray, count: int) -> np.ndarray:
    """Union labels that touch across the toroidal seam; returns root per label."""
    parent = np.arange(count + 1)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    b = labels.shape[1]
    for j in np.nonzero(labels[0, :])[0]:
        for dj in (-1, 0, 1):
            other = labels[-1, (j + dj) % b]
            if other:
                union(int(labels[0, j]), int(other))
    b = labels.shape[0]
    for i in np.nonzero(labels[:, 0])[0]:
        for di in (-1, 0, 1):
            other = labels[(i + di) % b, -1]
            if other:
                union(int(labels[i, 0]), int(other))
    return np.array([find(x) for x in range(count + 1)])


def cfar_detect(image: NafImage, cfg: CfarConfig) -> list[tuple[int, int]]:
    """CFAR hits as grid cells, strongest first.

    Flagged cells that touch (including diagonally, wrapping at the domain
    edge) merge into one hit at their strongest cell.
    """
    mask = cfar_mask(image, cfg)
    if not mask.any():
        return []
    labels, count = label(mask, structure=np.ones((3, 3), dtype=bool))
    roots = _merge_wrapped_labels(labels, count)
    labels = roots[labels]
    ids = np.unique(labels[mask])
    power = np.abs(image.values) ** 2
    cells = maximum_position(power, labels=labels, index=ids)
    cells = [(int(i), int(j)) for i, j in cells]
    cells.sort(key=lambda c: -power[c])
    return cells


def refine_peak(image: NafImage, cell: tuple[int, int]) -> NafPoint:
    """Sub-cell peak position via per-axis 3-point parabolic log-magnitude fit.

    Falls back to the cell center along any axis whose neighbors are not both
    smaller than the center; the refined offset never exceeds half a cell.
    """
    mag = np.abs(image.values)
    b = image.grid.bins_per_axis
    i, j = cell
    offsets = []
    for axis in (0, 1):
        if axis == 0:
            lo, c, hi = mag[(i - 1) % b, j], mag[i, j], mag[(i + 1) % b, j]
        else:
            lo, c, hi = mag[i, (j - 1) % b], mag[i, j], mag[i, (j + 1) % b]
        if c <= lo or c <= hi or lo <= 0.0 or hi <= 0.0:
            offsets.append(0.0)
            continue
        l_lo, l_c, l_hi = math.log(lo), math.log(c), math.log(hi)
        denom = l_lo - 2.0 * l_c + l_hi
        delta = 0.0 if denom >= 0.0 else 0.5 * (l_lo - l_hi) / denom
        offsets.append(max(-0.5, min(0.5, delta)))
    ax = image.grid.axis
    return NafPoint(
        float(wrap_naf(ax[i] + offsets[0] / b)),
        float(wrap_naf(ax[j] + offsets[1] / b)),
    )


def _default_window_radius(pair: ArrayPair) -> float:
    _, n_plus = coarray_dims(pair)
    return resolution(half_mainlobe_width(n_plus, TaperSpec(45.0)))


def _window_mask(grid, position: NafPoint, radius: float) -> np.ndarray:
    ax = grid.axis
    dl = wrap_naf(ax - position.l)
    de = wrap_naf(ax - position.eta)
    return dl[:, None] ** 2 + de[None, :] ** 2 <= radius**2


def _fit_amplitude(
    image: NafImage, position: NafPoint, co_weights: WeightGrid, radius: float
) -> tuple[complex, np.ndarray]:
    """Least-squares amplitude of the shifted PSF against the image near ``position``."""
    template = point_source_image(co_weights, position, image.grid)
    mask = _window_mask(image.grid, position, radius)
    t_win = template[mask]
    energy = np.vdot(t_win, t_win).real
    if energy <= 0.0:
        raise RuntimeError("shifted PSF carries no energy inside the fit window")
    amplitude = complex(np.vdot(t_win, image.values[mask]) / energy)
    return amplitude, template


def cancel_target(
    image: NafImage,
    det: Detection,
    pair: ArrayPair,
    acq: AcquisitionSet,
    window_radius: float | None = None,
    co_weights: WeightGrid | None = None,
) -> NafImage:
    """Subtract the detection's fitted point spread function from the image."""
    if co_weights is None:
        co_weights = effective_weights(pair, acq)
    if window_radius is None:
        window_radius = _default_window_radius(pair)
    amplitude, template = _fit_amplitude(image, det.position, co_weights, window_radius)
    return NafImage(
        values=image.values - amplitude * template,
        grid=image.grid,
        pair=image.pair,
        acq=image.acq,
    )


def detect_all(
    image: NafImage,
    cfg: CfarConfig,
    pair: ArrayPair,
    acq: AcquisitionSet,
    max_targets: int = 10,
    window_radius: float | None = None,
    co_weights: WeightGrid | None = None,
) -> list[Detection]:
    """Successive detection: CFAR, refine the strongest hit, fit, subtract, repeat."""
    if co_weights is None:
        co_weights = effective_weights(pair, acq)
    if window_radius is None:
        window_radius = _default_window_radius(pair)
    detections: list[Detection] = []
    current = image
    for _ in range(max_targets):
        mask = cfar_mask(current, cfg)
        if not mask.any():
            break
        power = np.abs(current.values) ** 2
        # The strongest merged CFAR hit is the strongest flagged cell.
        flat = np.where(mask.ravel(), power.ravel(), -1.0)
        cell = np.unravel_index(int(flat.argmax()), power.shape)
        position = refine_peak(current, cell)
        amplitude, template = _fit_amplitude(current, position, co_weights, window_radius)
        detections.append(
            Detection(position=position, power=abs(amplitude) ** 2, amplitude=amplitude)
        )
        current = NafImage(
            values=current.values - amplitude * template,
            grid=current.grid,
            pair=current.pair,
            acq=current.acq,
        )
    return detections


def match_truth(
    dets: list[Detection], scenario: Scenario, radius: float
) -> MatchCounts:
    """Greedy nearest-first one-to-one matching of detections to true targets.

    A detection can claim at most one target and vice versa; targets left
    unclaimed are misses, detections left unclaimed are false alarms.
    """
    if radius <= 0:
        raise ValueError("match radius must be positive")
    truths = scenario.positions
    candidates = []
    for di, det in enumerate(dets):
        for ti, truth in enumerate(truths):
            dist = toroidal_distance(det.position, truth)
            if dist <= radius:
                candidates.append((dist, di, ti))
    candidates.sort()
    used_d: set[int] = set()
    used_t: set[int] = set()
    for _, di, ti in candidates:
        if di in used_d or ti in used_t:
            continue
        used_d.add(di)
        used_t.add(ti)
    hits = len(used_t)
    return MatchCounts(
        hits=hits, misses=len(truths) - hits, false_alarms=len(dets) - len(used_d)
    )
