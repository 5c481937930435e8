"""Monte Carlo missed-detection study across sensing-array variants.

Each trial draws a random two-scatterer scene at a controlled NAF separation,
reconstructs the noisy image, runs the full detection pipeline, and matches
detections against the truth within the setup's resolution.  Trials use
counter-derived random substreams, so sweeps are bit-reproducible regardless
of how they are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .angular import NafGrid, NafPoint, make_grid, oversampled_bins, wrap_naf
from .beamsynth import AcquisitionSet, effective_weights, factorize
from .detection import CfarConfig, auto_cfar_config, detect_all, match_truth
from .geometry import ArrayPair, coarray_dims, make_ura, validate_pair
from .imaging import NoiseModel, Scenario, reconstruct
from .windowing import TaperSpec, WeightGrid, chebyshev_2d, half_mainlobe_width, resolution

__all__ = [
    "ExperimentConfig",
    "TrialOutcome",
    "PmdPoint",
    "PmdCurve",
    "place_targets",
    "run_trial",
    "sweep",
    "wilson_interval",
]

_TABLE_VARIANTS = ((3, 0.5), (3, 1.5), (3, 2.0), (5, 0.5), (5, 1.5), (5, 2.0), (7, 0.5), (7, 1.5), (7, 2.0))
_DEFAULT_DELTAS = tuple(round(0.02 * k, 2) for k in range(1, 10))

# Stream tags keeping factorization and trial substreams disjoint.
_STREAM_FACTORIZE = 1
_STREAM_TRIAL = 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition: fixed comms array, sensing variants, separations, noise."""

    sensing_variants: tuple[tuple[int, float], ...] = _TABLE_VARIANTS
    delta_grid: tuple[float, ...] = _DEFAULT_DELTAS
    comms_n_1d: int = 11
    comms_spacing: float = 0.5
    noise_db: float = -10.0
    trials: int = 10_000
    seed: int = 0
    taper_db: float = 45.0
    pfa: float = 1e-3
    oversampling: int = 8
    max_targets: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sensing_variants", tuple((int(n), float(d)) for n, d in self.sensing_variants)
        )
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        if not self.sensing_variants:
            raise ValueError("at least one sensing variant is required")
        if not self.delta_grid:
            raise ValueError("at least one separation value is required")
        if any(not 0.0 < d <= 0.5 for d in self.delta_grid):
            raise ValueError("separations must lie in (0, 0.5]")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0.0 < self.pfa < 1.0:
            raise ValueError("pfa must lie in (0, 1)")
        if self.oversampling < 2:
            raise ValueError("oversampling must be at least 2")
        comms = make_ura(self.comms_n_1d, self.comms_spacing)
        for n, d in self.sensing_variants:
            validate_pair(comms, make_ura(n, d))

    @property
    def taper(self) -> TaperSpec:
        return TaperSpec(self.taper_db)

    @property
    def noise_variance(self) -> float:
        return 10.0 ** (self.noise_db / 10.0)


@dataclass(frozen=True)
class TrialOutcome:
    """Detections of one trial matched against the true scatterers."""

    hits: int
    misses: int
    false_alarms: int
    n_targets: int


@dataclass(frozen=True)
class PmdPoint:
    delta: float
    pmd: float
    trials: int
    ci_lo: float
    ci_hi: float
    misses: int
    any_miss_trials: int
    false_alarms: int


@dataclass(frozen=True)
class PmdCurve:
    variant_n: int
    variant_spacing: float
    coarray_n_1d: int
    match_radius: float
    acquisition_count: int
    factorization_residual: float
    points: tuple[PmdPoint, ...] = field(default_factory=tuple)


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def place_targets(delta: float, rng: np.random.Generator) -> Scenario:
    """Random two-scatterer scene at fixed toroidal separation ``delta``.

    The first target is uniform on the NAF torus; the second sits at distance
    ``delta`` in a uniformly random direction (wrapped).  Both carry
    unit-modulus coefficients with independent uniform phases.
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 0.5]")
    base = rng.uniform(-0.5, 0.5, size=2)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    second = wrap_naf(base + delta * np.array([math.cos(angle), math.sin(angle)]))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
    return Scenario(
        targets=(
            (NafPoint(float(base[0]), float(base[1])), complex(np.exp(1j * phases[0]))),
            (NafPoint(float(second[0]), float(second[1])), complex(np.exp(1j * phases[1]))),
        )
    )


def run_trial(
    pair: ArrayPair,
    acq: AcquisitionSet,
    scenario: Scenario,
    noise: NoiseModel,
    cfg: ExperimentConfig,
    grid: NafGrid | None = None,
    cfar: CfarConfig | None = None,
    match_radius: float | None = None,
    co_weights: WeightGrid | None = None,
    rng: np.random.Generator | None = None,
) -> TrialOutcome:
    """Reconstruct, detect, and score one scene; heavy per-variant pieces may be reused."""
    _, n_plus = coarray_dims(pair)
    if match_radius is None:
        match_radius = resolution(half_mainlobe_width(n_plus, cfg.taper))
    if grid is None:
        grid = make_grid(oversampled_bins(n_plus, cfg.oversampling))
    if cfar is None:
        cfar = auto_cfar_config(grid.bins_per_axis, match_radius, cfg.pfa)
    if co_weights is None:
        co_weights = effective_weights(pair, acq)
    image = reconstruct(pair, acq, scenario, noise, grid, rng=rng, co_weights=co_weights)
    dets = detect_all(
        image,
        cfar,
        pair,
        acq,
        max_targets=cfg.max_targets,
        window_radius=match_radius,
        co_weights=co_weights,
    )
    counts = match_truth(dets, scenario, match_radius)
    return TrialOutcome(
        hits=counts.hits,
        misses=counts.misses,
        false_alarms=counts.false_alarms,
        n_targets=scenario.k,
    )


@dataclass(frozen=True)
class _VariantSetup:
    index: int
    pair: ArrayPair
    acq: AcquisitionSet
    co_weights: WeightGrid
    grid_bins: int
    cfar: CfarConfig
    match_radius: float
    coarray_n_1d: int


def _prepare_variant(cfg: ExperimentConfig, index: int) -> _VariantSetup:
    n, d = cfg.sensing_variants[index]
    pair = validate_pair(make_ura(cfg.comms_n_1d, cfg.comms_spacing), make_ura(n, d))
    spacing, n_plus = coarray_dims(pair)
    desired = chebyshev_2d(n_plus, cfg.taper, spacing=spacing)
    fact_seed = np.random.SeedSequence([cfg.seed, _STREAM_FACTORIZE, index])
    acq = factorize(pair, desired, q_max=n * n, tol=1e-6, seed=fact_seed)
    rho = resolution(half_mainlobe_width(n_plus, cfg.taper))
    bins = oversampled_bins(n_plus, cfg.oversampling)
    cfar = auto_cfar_config(bins, rho, cfg.pfa)
    return _VariantSetup(
        index=index,
        pair=pair,
        acq=acq,
        co_weights=effective_weights(pair, acq),
        grid_bins=bins,
        cfar=cfar,
        match_radius=rho,
        coarray_n_1d=n_plus,
    )


def _run_chunk(
    setup: _VariantSetup, cfg: ExperimentConfig, d_idx: int, start: int, stop: int
) -> tuple[int, int, int, int, int, int, int]:
    delta = cfg.delta_grid[d_idx]
    grid = make_grid(setup.grid_bins)
    noise = NoiseModel(variance=cfg.noise_variance)
    hits = misses = fas = any_missed = 0
    for trial in range(start, stop):
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, _STREAM_TRIAL, setup.index, d_idx, trial])
        )
        scenario = place_targets(delta, rng)
        outcome = run_trial(
            setup.pair,
            setup.acq,
            scenario,
            noise,
            cfg,
            grid=grid,
            cfar=setup.cfar,
            match_radius=setup.match_radius,
            co_weights=setup.co_weights,
            rng=rng,
        )
        hits += outcome.hits
        misses += outcome.misses
        fas += outcome.false_alarms
        any_missed += outcome.misses > 0
    return setup.index, d_idx, hits, misses, fas, any_missed, stop - start


def sweep(cfg: ExperimentConfig, threads: int = 1, chunk_size: int = 50) -> list[PmdCurve]:
    """Missed-detection probability curves for every sensing variant.

    The per-target probability is total misses over 2 * trials; Wilson 95%
    intervals use the same denominator.  Results are reproducible from the
    seed regardless of ``threads``.
    """
    setups = [_prepare_variant(cfg, v) for v in range(len(cfg.sensing_variants))]
    n_deltas = len(cfg.delta_grid)
    acc = np.zeros((len(setups), n_deltas, 4), dtype=np.int64)

    tasks = []
    for setup in setups:
        for d_idx in range(n_deltas):
            for start in range(0, cfg.trials, chunk_size):
                tasks.append((setup, cfg, d_idx, start, min(start + chunk_size, cfg.trials)))

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = pool.map(_run_chunk_star, tasks, chunksize=4)
            for v_idx, d_idx, hits, misses, fas, any_missed, _ in results:
                acc[v_idx, d_idx] += (hits, misses, fas, any_missed)
    else:
        for task in tasks:
            v_idx, d_idx, hits, misses, fas, any_missed, _ = _run_chunk(*task)
            acc[v_idx, d_idx] += (hits, misses, fas, any_missed)

    curves = []
    for setup in setups:
        points = []
        for d_idx, delta in enumerate(cfg.delta_grid):
            hits, misses, fas, any_missed = (int(x) for x in acc[setup.index, d_idx])
            n = 2 * cfg.trials
            lo, hi = wilson_interval(misses, n)
            points.append(
                PmdPoint(
                    delta=delta,
                    pmd=misses / n,
                    trials=cfg.trials,
                    ci_lo=lo,
                    ci_hi=hi,
                    misses=misses,
                    any_miss_trials=any_missed,
                    false_alarms=fas,
                )
            )
        n, d = cfg.sensing_variants[setup.index]
        curves.append(
            PmdCurve(
                variant_n=n,
                variant_spacing=d,
                coarray_n_1d=setup.coarray_n_1d,
                match_radius=setup.match_radius,
                acquisition_count=setup.acq.q_count,
                factorization_residual=setup.acq.residual,
                points=tuple(points),
            )
        )
    return curves


def _run_chunk_star(task):
    return _run_chunk(*task)
