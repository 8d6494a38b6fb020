"""End-to-end estimation: standardize, filter, tail-average, threshold.

`ols_oracle` is the independent batch reference: per-equation least squares
on exactly the regressors the filter sees.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficientRegressors, SeriesTooShort, ZeroVarianceChannel
from .kalman import StateTrajectory, run_filter
from .model import CausalFactors, EstimationConfig, MultiChannelSeries
from .statespace import StateLayout, state_layout

logger = logging.getLogger(__name__)

# estimate() needs this many samples beyond the lag order
MIN_EXTRA_SAMPLES = 10


@dataclass(frozen=True, eq=False)
class EstimationResult:
    factors: CausalFactors
    raw_factors: CausalFactors
    trajectory: StateTrajectory
    means: np.ndarray
    stds: np.ndarray
    config: EstimationConfig
    tail_window_used: int


def standardize(series: MultiChannelSeries) -> tuple[MultiChannelSeries, np.ndarray, np.ndarray]:
    """Zero-mean, unit-variance channels (sample std, ddof=1)."""
    data = series.data
    if data.shape[0] < 2:
        raise SeriesTooShort("standardization needs at least 2 samples")
    means = data.mean(axis=0)
    centered = data - means
    stds = np.sqrt(np.sum(centered**2, axis=0) / (data.shape[0] - 1))
    for name, sd, col in zip(series.channel_names, stds, centered.T):
        if sd == 0 or not np.any(col):
            raise ZeroVarianceChannel(name)
    return series.with_data(centered / stds), means, stds


def pack_factors(values: np.ndarray, layout: StateLayout, channel_names) -> CausalFactors:
    """Scatter a length-F factor vector into S0 and S1..SD."""
    G, D = layout.n_channels, layout.lag_order
    mats = np.zeros((D + 1, G, G))
    for fid, v in zip(layout.entries, values):
        mats[fid.lag, fid.effect, fid.cause] = v
    return CausalFactors(mats[0], tuple(mats[1:]), tuple(channel_names))


def unpack_factors(factors: CausalFactors, layout: StateLayout) -> np.ndarray:
    return np.array([factors.value(fid) for fid in layout.entries])


def tail_average(trajectory: StateTrajectory, window: int) -> np.ndarray:
    """Mean of the last ``min(window, N)`` posterior values of each factor."""
    if window < 1:
        raise ValueError("window must be >= 1")
    w = min(window, trajectory.n_samples)
    return trajectory.values[-w:].mean(axis=0)


def threshold_factors(raw: CausalFactors, level: float) -> CausalFactors:
    """Zero every factor whose magnitude is at most ``level``."""
    if level < 0:
        raise ValueError("threshold level must be >= 0")
    return raw.map_values(lambda m: np.where(np.abs(m) <= level, 0.0, m))


def estimate(series: MultiChannelSeries, cfg: EstimationConfig | None = None) -> EstimationResult:
    cfg = cfg or EstimationConfig()
    N, G = series.data.shape
    D = cfg.lag_order
    if N <= D + MIN_EXTRA_SAMPLES:
        raise SeriesTooShort(f"need more than {D + MIN_EXTRA_SAMPLES} samples, got {N}")

    if cfg.standardize:
        work, means, stds = standardize(series)
    else:
        work, means, stds = series, np.zeros(G), np.ones(G)

    trajectory = run_filter(work, cfg)
    window = min(cfg.tail_window, (N - D) // 2)
    if window < cfg.tail_window:
        logger.info("tail window clamped from %d to %d samples", cfg.tail_window, window)
    raw = pack_factors(tail_average(trajectory, window), trajectory.layout, series.channel_names)
    return EstimationResult(
        factors=threshold_factors(raw, cfg.threshold),
        raw_factors=raw,
        trajectory=trajectory,
        means=means,
        stds=stds,
        config=cfg,
        tail_window_used=window,
    )


def regressors(data: np.ndarray, layout: StateLayout, effect: int) -> np.ndarray:
    """Design matrix for one effect channel over samples ``D..N-1``.

    Column order follows the layout's factor block for ``effect``.
    """
    N = data.shape[0]
    D = layout.lag_order
    block = layout.entries[layout.block(effect)]
    return np.column_stack([data[D - fid.lag:N - fid.lag, fid.cause] for fid in block])


def ols_oracle(series: MultiChannelSeries, lag_order: int = 1) -> CausalFactors:
    """Per-channel batch least squares of ``y_k[n]`` on every other channel at
    ``n`` and every channel at ``n-1 .. n-D``; no thresholding."""
    data = series.data
    N, G = data.shape
    layout = state_layout(G, lag_order)
    coefs = []
    for k in range(G):
        X = regressors(data, layout, k)
        if X.shape[0] <= X.shape[1]:
            raise RankDeficientRegressors(
                f"{X.shape[0]} equations for {X.shape[1]} regressors in channel {series.channel_names[k]!r}"
            )
        beta, _, rank, _ = np.linalg.lstsq(X, data[lag_order:, k], rcond=None)
        if rank < X.shape[1]:
            raise RankDeficientRegressors(
                f"regressors for channel {series.channel_names[k]!r} have rank {rank} < {X.shape[1]}"
            )
        coefs.append(beta)
    return pack_factors(np.concatenate(coefs), layout, series.channel_names)
