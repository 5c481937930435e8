"""Factorize a desired sum-co-array taper into joint Tx/Rx acquisition weights,
and evaluate point spread functions for single arrays and joint setups.

A joint acquisition applies one weight grid on the transmit array and one on
the receive array; summing several acquisitions realizes, at each co-array
position, the sum over all element pairs of the product of their weights.
The factorizer solves the inverse problem: given desired co-array weights,
find a small number of acquisitions whose combined weights match them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .angular import NafGrid, NafPoint
from .geometry import ArrayGeometry, ArrayPair, coarray_dims
from .windowing import WeightGrid

__all__ = [
    "AcquisitionSet",
    "PsfMap",
    "ConvergenceError",
    "effective_weights",
    "factorize",
    "single_psf",
    "joint_psf",
]

_LATTICE_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Factorization could not reach the requested residual; carries the best attempt."""

    def __init__(self, message: str, best: "AcquisitionSet | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class AcquisitionSet:
    """Per-acquisition Tx and Rx weight grids realizing a co-array taper."""

    tx_weights: tuple[WeightGrid, ...]
    rx_weights: tuple[WeightGrid, ...]
    residual: float

    def __post_init__(self) -> None:
        if len(self.tx_weights) != len(self.rx_weights) or not self.tx_weights:
            raise ValueError("need matching, non-empty Tx and Rx weight lists")
        object.__setattr__(self, "tx_weights", tuple(self.tx_weights))
        object.__setattr__(self, "rx_weights", tuple(self.rx_weights))

    @property
    def q_count(self) -> int:
        return len(self.tx_weights)

    @property
    def noise_enhancement(self) -> float:
        """Post-beamforming noise power multiplier: total squared Rx weight norm."""
        return float(sum(np.sum(np.abs(g.values) ** 2) for g in self.rx_weights))


@dataclass(frozen=True)
class PsfMap:
    """Complex response over a NAF grid for a fixed scan direction."""

    values: np.ndarray
    scan: NafPoint
    grid: NafGrid

    def power_db(self, floor: float = 1e-30) -> np.ndarray:
        p = np.abs(self.values) ** 2
        return 10.0 * np.log10(np.maximum(p, floor))


def _upsampled(grid: np.ndarray, m: int) -> np.ndarray:
    """Insert m-1 zeros between entries along both axes."""
    if m == 1:
        return grid
    n = grid.shape[0]
    out = np.zeros((m * (n - 1) + 1, m * (n - 1) + 1), dtype=grid.dtype)
    out[::m, ::m] = grid
    return out


def effective_weights(pair: ArrayPair, acq: AcquisitionSet) -> WeightGrid:
    """Collapse an acquisition set onto the sum co-array lattice.

    The weight collected at each co-array cell is the sum over acquisitions
    and over all Tx/Rx element pairs landing on that cell of the product of
    their weights; per acquisition this is the 2D convolution of the Tx grid
    with the Rx grid upsampled by the spacing ratio.
    """
    spacing, n_plus = coarray_dims(pair)
    m = pair.spacing_ratio
    total = np.zeros((n_plus, n_plus), dtype=complex)
    for tx, rx in zip(acq.tx_weights, acq.rx_weights):
        if tx.n_1d != pair.comms.n_1d or rx.n_1d != pair.sensing.n_1d:
            raise ValueError(
                "weight grid sizes do not match the array pair: "
                f"tx {tx.n_1d} vs {pair.comms.n_1d}, rx {rx.n_1d} vs {pair.sensing.n_1d}"
            )
        total += convolve2d(tx.values.astype(complex), _upsampled(rx.values.astype(complex), m))
    return WeightGrid(values=total, spacing=spacing)


# ---------------------------------------------------------------------------
# Alternating least-squares factorization
# ---------------------------------------------------------------------------


def _tx_design_1d(rx_cols: np.ndarray, n_c: int, m: int, length: int) -> np.ndarray:
    """Design matrix mapping stacked Tx vectors to the combined 1D weights."""
    n_s, q = rx_cols.shape
    a = np.zeros((length, q * n_c), dtype=complex)
    up_len = m * (n_s - 1) + 1
    for k in range(q):
        up = np.zeros(up_len, dtype=complex)
        up[::m] = rx_cols[:, k]
        for j in range(n_c):
            a[j : j + up_len, k * n_c + j] = up
    return a


def _rx_design_1d(tx_cols: np.ndarray, n_s: int, m: int, length: int) -> np.ndarray:
    """Design matrix mapping stacked Rx vectors to the combined 1D weights."""
    n_c, q = tx_cols.shape
    a = np.zeros((length, q * n_s), dtype=complex)
    for k in range(q):
        for i in range(n_s):
            a[m * i : m * i + n_c, k * n_s + i] = tx_cols[:, k]
    return a


def _als_1d(
    target: np.ndarray,
    n_c: int,
    n_s: int,
    m: int,
    q1: int,
    rng: np.random.Generator,
    restarts: int,
    max_iter: int,
    change_tol: float = 1e-10,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Alternating LS for target ~ sum_q conv(tx_q, upsample_m(rx_q)) in 1D."""
    length = target.shape[0]
    norm_t = np.linalg.norm(target)
    best_res, best_tx, best_rx = np.inf, None, None
    for _ in range(restarts):
        rx = (rng.standard_normal((n_s, q1)) + 1j * rng.standard_normal((n_s, q1))) / math.sqrt(2)
        prev = np.inf
        tx = np.zeros((n_c, q1), dtype=complex)
        res = np.inf
        for _ in range(max_iter):
            a_tx = _tx_design_1d(rx, n_c, m, length)
            tx = np.linalg.lstsq(a_tx, target, rcond=None)[0].reshape(q1, n_c).T
            a_rx = _rx_design_1d(tx, n_s, m, length)
            rx_vec = np.linalg.lstsq(a_rx, target, rcond=None)[0]
            rx = rx_vec.reshape(q1, n_s).T
            res = np.linalg.norm(a_rx @ rx_vec - target) / norm_t
            if abs(prev - res) < change_tol:
                break
            prev = res
        if res < best_res:
            best_res, best_tx, best_rx = res, tx, rx
        if best_res < 1e-13:
            break
    return best_res, best_tx, best_rx


def _tx_design_2d(rx_grids: np.ndarray, n_c: int, m: int, size: int) -> np.ndarray:
    """2D analogue of the Tx design matrix; rx_grids has shape (n_s, n_s, q)."""
    q = rx_grids.shape[2]
    cols = np.zeros((size * size, q * n_c * n_c), dtype=complex)
    for k in range(q):
        up = _upsampled(rx_grids[:, :, k], m)
        ul = up.shape[0]
        for j1 in range(n_c):
            for j2 in range(n_c):
                canvas = np.zeros((size, size), dtype=complex)
                canvas[j1 : j1 + ul, j2 : j2 + ul] = up
                cols[:, k * n_c * n_c + j1 * n_c + j2] = canvas.ravel()
    return cols


def _rx_design_2d(tx_grids: np.ndarray, n_s: int, m: int, size: int) -> np.ndarray:
    """2D analogue of the Rx design matrix; tx_grids has shape (n_c, n_c, q)."""
    n_c = tx_grids.shape[0]
    q = tx_grids.shape[2]
    cols = np.zeros((size * size, q * n_s * n_s), dtype=complex)
    for k in range(q):
        tx = tx_grids[:, :, k]
        for i1 in range(n_s):
            for i2 in range(n_s):
                canvas = np.zeros((size, size), dtype=complex)
                canvas[m * i1 : m * i1 + n_c, m * i2 : m * i2 + n_c] = tx
                cols[:, k * n_s * n_s + i1 * n_s + i2] = canvas.ravel()
    return cols


def _als_2d(
    target: np.ndarray,
    n_c: int,
    n_s: int,
    m: int,
    q: int,
    rng: np.random.Generator,
    restarts: int,
    max_iter: int,
    change_tol: float = 1e-10,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Direct 2D alternating LS for non-separable desired tapers."""
    size = target.shape[0]
    t_vec = target.ravel()
    norm_t = np.linalg.norm(t_vec)
    best_res, best_tx, best_rx = np.inf, None, None
    for _ in range(restarts):
        rx = (
            rng.standard_normal((n_s, n_s, q)) + 1j * rng.standard_normal((n_s, n_s, q))
        ) / math.sqrt(2)
        prev = np.inf
        tx = np.zeros((n_c, n_c, q), dtype=complex)
        res = np.inf
        for _ in range(max_iter):
            a_tx = _tx_design_2d(rx, n_c, m, size)
            tx_vec = np.linalg.lstsq(a_tx, t_vec, rcond=None)[0]
            tx = np.moveaxis(tx_vec.reshape(q, n_c, n_c), 0, 2)
            a_rx = _rx_design_2d(tx, n_s, m, size)
            rx_vec = np.linalg.lstsq(a_rx, t_vec, rcond=None)[0]
            rx = np.moveaxis(rx_vec.reshape(q, n_s, n_s), 0, 2)
            res = np.linalg.norm(a_rx @ rx_vec - t_vec) / norm_t
            if abs(prev - res) < change_tol:
                break
            prev = res
        if res < best_res:
            best_res, best_tx, best_rx = res, tx, rx
        if best_res < 1e-13:
            break
    return best_res, best_tx, best_rx


def _q1_schedule(n_s: int, q_max: int) -> list[int]:
    vals = []
    q = 1
    while q < n_s:
        vals.append(q)
        q *= 2
    vals.append(n_s)
    return [v for v in vals if v * v <= q_max] or [1]


def _q_schedule_2d(cap: int) -> list[int]:
    vals = []
    q = 1
    while q < cap:
        vals.append(q)
        q *= 2
    vals.append(cap)
    return sorted(set(vals))


def _balanced(tx: np.ndarray, rx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale one acquisition so Tx and Rx carry equal weight norms.

    The per-acquisition scale split is free (only the Tx*Rx product enters the
    co-array weights); balancing pins it so the reported noise enhancement is
    well defined instead of an artifact of the solver.
    """
    tn = float(np.linalg.norm(tx))
    rn = float(np.linalg.norm(rx))
    if tn == 0.0 or rn == 0.0:
        return tx, rx
    gamma = math.sqrt(rn / tn)
    return tx * gamma, rx / gamma


def _assemble_separable(
    pair: ArrayPair,
    tx_a: np.ndarray,
    rx_a: np.ndarray,
    tx_b: np.ndarray,
    rx_b: np.ndarray,
) -> tuple[list[WeightGrid], list[WeightGrid]]:
    """Form 2D acquisitions as all outer-product pairs of the per-axis factors."""
    tx_grids, rx_grids = [], []
    q1 = tx_a.shape[1]
    for qa in range(q1):
        for qb in range(q1):
            tx, rx = _balanced(
                np.outer(tx_a[:, qa], tx_b[:, qb]), np.outer(rx_a[:, qa], rx_b[:, qb])
            )
            tx_grids.append(WeightGrid(tx, pair.comms.spacing))
            rx_grids.append(WeightGrid(rx, pair.sensing.spacing))
    return tx_grids, rx_grids


def factorize(
    pair: ArrayPair,
    desired: WeightGrid,
    q_max: int | None = None,
    tol: float = 1e-6,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 500,
) -> AcquisitionSet:
    """Find acquisition weights whose combined co-array weights match ``desired``.

    Separable tapers are factored per axis by alternating least squares over a
    doubling acquisition-count schedule (all outer-product pairs form the 2D
    set, so the 2D count is the per-axis count squared); non-separable tapers
    fall back to direct 2D alternating least squares.  The returned residual
    is the relative L2 mismatch of the combined co-array weights.  Raises
    ConvergenceError (carrying the best attempt) when no tried count reaches
    ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _, n_plus = coarray_dims(pair)
    dv = np.asarray(desired.values, dtype=complex)
    if dv.shape != (n_plus, n_plus):
        raise ValueError(
            f"desired taper is {dv.shape[0]}x{dv.shape[1]}, co-array is {n_plus}x{n_plus}"
        )
    n_c, n_s, m = pair.comms.n_1d, pair.sensing.n_1d, pair.spacing_ratio
    if q_max is None:
        q_max = n_s * n_s
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    norm_d = np.linalg.norm(dv)
    if norm_d == 0:
        zero_tx = WeightGrid(np.zeros((n_c, n_c), complex), pair.comms.spacing)
        zero_rx = WeightGrid(np.zeros((n_s, n_s), complex), pair.sensing.spacing)
        return AcquisitionSet((zero_tx,), (zero_rx,), 0.0)

    rng = np.random.default_rng(seed)
    u, s, vh = np.linalg.svd(dv)
    separable = len(s) == 1 or s[1] <= 1e-12 * s[0]

    best: AcquisitionSet | None = None
    if separable:
        vec_a = u[:, 0] * math.sqrt(s[0])
        vec_b = vh[0, :] * math.sqrt(s[0])
        symmetric = np.allclose(vec_a, vec_b, rtol=0.0, atol=1e-12 * float(np.abs(vec_a).max()))
        for q1 in _q1_schedule(n_s, q_max):
            res_a, tx_a, rx_a = _als_1d(vec_a, n_c, n_s, m, q1, rng, restarts, max_iter)
            if symmetric:
                tx_b, rx_b = tx_a, rx_a
            else:
                _, tx_b, rx_b = _als_1d(vec_b, n_c, n_s, m, q1, rng, restarts, max_iter)
            tx_grids, rx_grids = _assemble_separable(pair, tx_a, rx_a, tx_b, rx_b)
            cand = AcquisitionSet(tuple(tx_grids), tuple(rx_grids), 0.0)
            resid = float(np.linalg.norm(effective_weights(pair, cand).values - dv) / norm_d)
            cand = AcquisitionSet(cand.tx_weights, cand.rx_weights, resid)
            if best is None or resid < best.residual:
                best = cand
            if resid <= tol:
                return cand
    else:
        for q in _q_schedule_2d(min(q_max, n_s * n_s)):
            _, tx3, rx3 = _als_2d(dv, n_c, n_s, m, q, rng, restarts, max_iter)
            tx_grids, rx_grids = [], []
            for k in range(q):
                tx, rx = _balanced(tx3[:, :, k], rx3[:, :, k])
                tx_grids.append(WeightGrid(tx, pair.comms.spacing))
                rx_grids.append(WeightGrid(rx, pair.sensing.spacing))
            cand = AcquisitionSet(tuple(tx_grids), tuple(rx_grids), 0.0)
            resid = float(np.linalg.norm(effective_weights(pair, cand).values - dv) / norm_d)
            cand = AcquisitionSet(cand.tx_weights, cand.rx_weights, resid)
            if best is None or resid < best.residual:
                best = cand
            if resid <= tol:
                return cand

    raise ConvergenceError(
        f"no acquisition count up to {q_max} reached residual {tol:g} "
        f"(best {best.residual:g} with Q={best.q_count})",
        best=best,
    )


# ---------------------------------------------------------------------------
# Point spread functions
# ---------------------------------------------------------------------------


def single_psf(
    geom: ArrayGeometry,
    weights: WeightGrid,
    scan: NafPoint,
    grid: NafGrid,
    reference_spacing: float = 0.5,
) -> PsfMap:
    """Response of one weighted array over the grid, steered to ``scan``.

    Scanning applies the conjugate steering phase at the scan direction, so
    the response of a unit-sum taper peaks with value 1 where the probe
    direction equals the scan direction.
    """
    w = np.asarray(weights.values, dtype=complex)
    if w.shape != (geom.n_1d, geom.n_1d):
        raise ValueError(f"weight grid {w.shape} does not match geometry side {geom.n_1d}")
    b = grid.bins_per_axis
    stride = geom.spacing / reference_spacing
    s_int = round(stride)
    if abs(stride - s_int) <= _LATTICE_TOL and s_int * (geom.n_1d - 1) < b:
        g = s_int * np.arange(geom.n_1d)
        gx, gz = g[:, None], g[None, :]
        mod = np.exp(2j * np.pi * (gx * scan.l + gz * scan.eta)) * (-1.0) ** (gx + gz)
        canvas = np.zeros((b, b), dtype=complex)
        canvas[np.ix_(g, g)] = w * mod
        values = np.fft.fft2(canvas)
    else:
        pos = geom.positions / reference_spacing
        w_eff = w.ravel() * np.exp(2j * np.pi * (pos @ scan.as_array()))
        pts = grid.points
        values = np.empty(pts.shape[0], dtype=complex)
        chunk = 8192
        for lo in range(0, pts.shape[0], chunk):
            hi = min(lo + chunk, pts.shape[0])
            values[lo:hi] = np.exp(-2j * np.pi * (pts[lo:hi] @ pos.T)) @ w_eff
        values = values.reshape(b, b)
    return PsfMap(values=values, scan=scan, grid=grid)


def joint_psf(pair: ArrayPair, acq: AcquisitionSet, scan: NafPoint, grid: NafGrid) -> PsfMap:
    """Joint Tx/Rx response: per-acquisition product of single-array responses, summed.

    Equals the response of the virtual sum co-array carrying the combined
    acquisition weights.
    """
    ref = min(pair.comms.spacing, pair.sensing.spacing)
    total = np.zeros((grid.bins_per_axis, grid.bins_per_axis), dtype=complex)
    for tx, rx in zip(acq.tx_weights, acq.rx_weights):
        total += (
            single_psf(pair.comms, tx, scan, grid, ref).values
            * single_psf(pair.sensing, rx, scan, grid, ref).values
        )
    return PsfMap(values=total, scan=scan, grid=grid)
