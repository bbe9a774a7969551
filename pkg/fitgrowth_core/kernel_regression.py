"""Nadaraya-Watson Gaussian kernel regression with percentile bootstrap bands."""
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from fitgrowth_core.concurrency_controller import get_concurrency_controller
from fitgrowth_core.config import get_config
from fitgrowth_core.panel_model import DataValidationError, KernelEstimate

logger = logging.getLogger(__name__)

Bandwidth = Union[float, Sequence[float]]


def bandwidth_default(xs: Sequence[float]) -> float:
    """Silverman's rule of thumb: 1.06 * min(sd, IQR/1.34) * n^(-1/5)."""
    xs = np.asarray(xs, dtype=float)
    if xs.size < 2 or np.ptp(xs) == 0:
        raise DataValidationError("bandwidth needs at least two distinct values")

    sd = float(np.std(xs, ddof=1))
    q75, q25 = np.percentile(xs, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 1.06 * spread * xs.size ** (-0.2)


def make_grid(xs: Sequence[float], n: Optional[int] = None) -> np.ndarray:
    n = get_config().kernel.grid_n if n is None else n
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0 or n < 1:
        raise DataValidationError("grid needs data and at least one point")
    return np.linspace(xs.min(), xs.max(), n)


def make_grid_2d(x1s: Sequence[float], x2s: Sequence[float], n: Optional[int] = None) -> np.ndarray:
    """Cartesian grid as an (n*n, 2) array, first axis varying slowest."""
    n = get_config().kernel.grid_n_2d if n is None else n
    g1, g2 = np.meshgrid(make_grid(x1s, n), make_grid(x2s, n), indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def _as_points(xs, dim: int) -> np.ndarray:
    points = np.asarray(xs, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2 or points.shape[1] != dim:
        raise DataValidationError(f"expected {dim}-dimensional points, got shape {points.shape}")
    return points


def _check_bandwidth(h: Bandwidth, dim: int) -> np.ndarray:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != (dim,):
        raise DataValidationError(f"need {dim} bandwidth(s), got {h.tolist()}")
    if not (np.isfinite(h) & (h > 0)).all():
        raise DataValidationError(f"bandwidths must be positive, got {h.tolist()}")
    return h


def _evaluate(points: np.ndarray, ys: np.ndarray, grid: np.ndarray, h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted means and raw weight sums at every grid point.

    Exponents are shifted by their per-row minimum so the closest point
    always has weight 1; the mean is taken around ys[0] so a constant
    response comes back exactly.
    """
    scaled = (grid[:, None, :] - points[None, :, :]) / h
    exponent = 0.5 * np.sum(scaled * scaled, axis=2)

    n_effective = np.exp(-exponent).sum(axis=1)
    weights = np.exp(-(exponent - exponent.min(axis=1, keepdims=True)))

    base = ys[0]
    estimate = base + (weights @ (ys - base)) / weights.sum(axis=1)
    return estimate, n_effective


def _estimate(points, ys, grid, h, support_floor: Optional[float]) -> KernelEstimate:
    floor = get_config().kernel.support_floor if support_floor is None else support_floor
    estimate, n_effective = _evaluate(points, ys, grid, h)
    out_grid = grid[:, 0] if grid.shape[1] == 1 else grid
    return KernelEstimate(
        grid=out_grid,
        estimate=estimate,
        bandwidth=tuple(h),
        n_effective=n_effective,
        supported=n_effective >= floor,
    )


def _prepare(xs, ys, grid, h, dim: int):
    points = _as_points(xs, dim)
    ys = np.asarray(ys, dtype=float)
    if points.shape[0] == 0:
        raise DataValidationError("kernel regression needs at least one data point")
    if ys.shape != (points.shape[0],):
        raise DataValidationError(f"{points.shape[0]} points but {ys.shape[0]} responses")
    if not (np.isfinite(points).all() and np.isfinite(ys).all()):
        raise DataValidationError("kernel regression data must be finite")
    return points, ys, _as_points(grid, dim), _check_bandwidth(h, dim)


def nw_1d(
    xs: Sequence[float],
    ys: Sequence[float],
    grid: Sequence[float],
    h: float,
    support_floor: Optional[float] = None,
) -> KernelEstimate:
    points, ys, grid, h = _prepare(xs, ys, grid, h, 1)
    return _estimate(points, ys, grid, h, support_floor)


def nw_2d(
    x1s: Sequence[float],
    x2s: Sequence[float],
    ys: Sequence[float],
    grid,
    h1: float,
    h2: float,
    support_floor: Optional[float] = None,
) -> KernelEstimate:
    """Product-kernel estimate on an (m, 2) grid of (x1, x2) pairs."""
    x1s, x2s = np.asarray(x1s, dtype=float), np.asarray(x2s, dtype=float)
    if x1s.shape != x2s.shape:
        raise DataValidationError(f"coordinate lengths differ: {x1s.shape} vs {x2s.shape}")
    points, ys, grid, h = _prepare(np.column_stack([x1s, x2s]), ys, grid, (h1, h2), 2)
    return _estimate(points, ys, grid, h, support_floor)


def _resample_chunk(points, ys, grid, h, seed: int, indices: range) -> Tuple[np.ndarray, int]:
    n = points.shape[0]
    out = np.empty((len(indices), grid.shape[0]))
    omitted = 0
    for row, b in enumerate(indices):
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        pick = rng.integers(0, n, size=n)
        estimate, n_effective = _evaluate(points[pick], ys[pick], grid, h)
        drop = (n_effective == 0) | ~np.isfinite(estimate)
        omitted += int(drop.sum())
        estimate[drop] = np.nan
        out[row] = estimate
    return out, omitted


def bootstrap_band(
    xs,
    ys: Sequence[float],
    grid,
    h: Bandwidth,
    B: Optional[int] = None,
    level: Optional[float] = None,
    seed: Optional[int] = None,
    support_floor: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> KernelEstimate:
    """Point estimate plus per-grid-point percentile interval from B pair resamples.

    ``xs`` is a 1D sequence or an (n, 2) array; ``h`` has one entry per
    dimension. Resample b draws from its own stream seeded by (seed, b),
    so the band does not depend on how resamples are spread over workers.
    """
    cfg = get_config().kernel
    B = cfg.bootstrap_b if B is None else B
    level = cfg.level if level is None else level
    seed = cfg.seed if seed is None else seed
    if B < 100:
        raise DataValidationError(f"bootstrap needs B >= 100, got {B}")
    if not 0.0 < level < 1.0:
        raise DataValidationError(f"level must be in (0, 1), got {level}")

    dim = np.atleast_1d(np.asarray(h, dtype=float)).size
    points, ys, grid_pts, h = _prepare(xs, ys, grid, h, dim)
    point = _estimate(points, ys, grid_pts, h, support_floor)

    controller = get_concurrency_controller()
    workers = max_workers or controller.get_max_workers()
    chunk = math.ceil(B / workers)
    chunks = [range(start, min(start + chunk, B)) for start in range(0, B, chunk)]

    with controller.executor(workers) as pool:
        futures = [
            pool.submit(_resample_chunk, points, ys, grid_pts, h, seed, indices)
            for indices in chunks
        ]
        results = [f.result() for f in futures]

    samples = np.vstack([r[0] for r in results])
    omitted = sum(r[1] for r in results)
    if omitted:
        logger.warning(f"Bootstrap omitted {omitted} resample values with zero support")

    tail = 100.0 * (1.0 - level) / 2.0
    low = np.full(grid_pts.shape[0], np.nan)
    high = np.full(grid_pts.shape[0], np.nan)
    pooled = ~np.isnan(samples).all(axis=0)
    if pooled.any():
        low[pooled], high[pooled] = np.nanpercentile(samples[:, pooled], [tail, 100.0 - tail], axis=0)

    # percentile edges may sit on the wrong side of the full-sample estimate
    ci_low = np.fmin(low, point.estimate)
    ci_high = np.fmax(high, point.estimate)

    logger.debug(f"Bootstrap band: B={B}, level={level}, seed={seed}, workers={len(chunks)}")
    return KernelEstimate(
        grid=point.grid,
        estimate=point.estimate,
        bandwidth=point.bandwidth,
        n_effective=point.n_effective,
        supported=point.supported,
        ci_low=ci_low,
        ci_high=ci_high,
        level=level,
        omitted=omitted,
    )


def threshold_crossing(estimate: KernelEstimate, fraction: Optional[float] = None) -> Optional[float]:
    """Lowest supported 1D grid point whose estimate exceeds ``fraction`` of the maximum.

    None when no grid point is supported or the supported maximum is not positive.
    """
    fraction = get_config().kernel.threshold_fraction if fraction is None else fraction
    if estimate.dim != 1:
        raise DataValidationError("threshold crossing is defined for 1D estimates only")

    supported = estimate.supported
    if not supported.any():
        return None
    peak = float(estimate.estimate[supported].max())
    if peak <= 0:
        return None

    above = supported & (estimate.estimate > fraction * peak)
    return float(estimate.grid[np.argmax(above)])
