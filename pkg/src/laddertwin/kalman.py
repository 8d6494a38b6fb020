"""Time-varying Kalman filter over the augmented causal-factor state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DimensionMismatch, SeriesTooShort, SingularInnovationCovariance
from .model import EstimationConfig, MultiChannelSeries
from .statespace import (
    StateLayout,
    TransitionModel,
    build_observation,
    build_transition,
    state_layout,
    transition_blocks,
)

# reciprocal condition estimate below which H P H' + R counts as singular
_RCOND_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class FilterState:
    mean: np.ndarray
    covariance: np.ndarray
    step: int = 0


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    """Per-sample posterior history.

    Rows ``0..D-1`` hold the prior mean (no measurement update happens before a
    full lag window is available); their innovations and traces are zero.
    """

    values: np.ndarray
    slopes: np.ndarray
    innovations: np.ndarray
    innovation_covariance_trace: np.ndarray
    layout: StateLayout

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def predict(fs: FilterState, tm: TransitionModel) -> FilterState:
    A, Q = tm.A, tm.Q
    n = fs.mean.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n) or fs.covariance.shape != (n, n):
        raise DimensionMismatch(
            f"state dim {n} vs A {A.shape}, Q {Q.shape}, P {fs.covariance.shape}"
        )
    mean = A @ fs.mean
    cov = _symmetrize(A @ fs.covariance @ A.T + Q)
    return FilterState(mean, cov, fs.step)


def update(
    fs: FilterState, H: np.ndarray, y: np.ndarray, R: np.ndarray
) -> tuple[FilterState, np.ndarray]:
    """Measurement update with a Joseph-form covariance.

    Returns the posterior state and the innovation ``y - H @ mean``.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P = fs.covariance
    n = fs.mean.shape[0]
    m = y.shape[0]
    if H.shape != (m, n) or R.shape != (m, m):
        raise DimensionMismatch(f"H {H.shape}, R {R.shape} incompatible with y[{m}], state[{n}]")

    innovation = y - H @ fs.mean
    PHt = P @ H.T
    S = H @ PHt + R
    try:
        factor = cho_factor(S, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularInnovationCovariance("innovation covariance is not positive definite", fs.step) from exc
    d = np.abs(np.diag(factor[0]))
    if d.min() ** 2 < _RCOND_FLOOR * d.max() ** 2:
        raise SingularInnovationCovariance("innovation covariance is numerically singular", fs.step)

    K = cho_solve(factor, PHt.T, check_finite=False).T
    mean = fs.mean + K @ innovation
    IKH = np.eye(n) - K @ H
    cov = _symmetrize(IKH @ P @ IKH.T + K @ R @ K.T)
    return FilterState(mean, cov, fs.step), innovation


def run_filter(
    series: MultiChannelSeries, cfg: EstimationConfig, method: str = "blocked"
) -> StateTrajectory:
    """Filter the whole series and record the posterior at every sample.

    The state starts at zero with covariance ``initial_state_variance * I``.
    For ``n = D .. N-1`` the filter predicts, builds H[n] from
    ``y[n-D..n]`` and updates with ``R = measurement_noise_variance * I``.

    ``method="dense"`` runs `predict`/`update` on the full 2F-dimensional
    state. ``method="blocked"`` (default) exploits that A, Q, P0 and R are all
    block-diagonal per effect channel and H[n] touches only its own channel's
    block, so the covariance never couples channels; the G sub-filters run
    batched and give the same posterior up to roundoff.
    """
    data = series.data
    N, G = data.shape
    D = cfg.lag_order
    if N <= D:
        raise SeriesTooShort(f"need more than {D} samples, got {N}")
    layout = state_layout(G, D)
    if method == "dense":
        return _run_dense(data, cfg, layout)
    if method == "blocked":
        return _run_blocked(data, cfg, layout)
    raise ValueError(f"unknown method {method!r}")


def _run_dense(data: np.ndarray, cfg: EstimationConfig, layout: StateLayout) -> StateTrajectory:
    N, G = data.shape
    D = cfg.lag_order
    hyper = cfg.hyper
    tm = build_transition(hyper, layout)
    R = hyper.measurement_noise_variance * np.eye(G)
    trace_r = np.trace(R)
    n_state = layout.state_dim

    values = np.zeros((N, layout.factor_count))
    slopes = np.zeros((N, layout.factor_count))
    innovations = np.zeros((N, G))
    traces = np.zeros(N)

    fs = FilterState(np.zeros(n_state), hyper.initial_state_variance * np.eye(n_state), 0)
    for n in range(D, N):
        fs = predict(FilterState(fs.mean, fs.covariance, n), tm)
        H = build_observation(data[n - D:n + 1], layout)
        traces[n] = np.sum((H @ fs.covariance) * H) + trace_r
        fs, innovations[n] = update(fs, H, data[n], R)
        values[n] = fs.mean[0::2]
        slopes[n] = fs.mean[1::2]
    return StateTrajectory(values, slopes, innovations, traces, layout)


def _regressor_index(layout: StateLayout) -> tuple[np.ndarray, np.ndarray]:
    """(lag, cause) for every factor slot of every channel block, shape (G, m)."""
    ids = np.array(layout.entries, dtype=int).reshape(layout.n_channels, layout.per_channel, 3)
    return ids[:, :, 2], ids[:, :, 1]


def _run_blocked(data: np.ndarray, cfg: EstimationConfig, layout: StateLayout) -> StateTrajectory:
    N, G = data.shape
    D = cfg.lag_order
    hyper = cfg.hyper
    m = layout.per_channel
    dim = 2 * m
    r = hyper.measurement_noise_variance

    a0, q0 = transition_blocks(hyper)
    A = np.kron(np.eye(m), a0)
    At = A.T
    Q = np.kron(np.eye(m), q0)
    lags, causes = _regressor_index(layout)
    eye = np.eye(dim)

    mean = np.zeros((G, dim))
    P = np.broadcast_to(hyper.initial_state_variance * eye, (G, dim, dim)).copy()
    h = np.zeros((G, dim))

    values = np.zeros((N, layout.factor_count))
    slopes = np.zeros((N, layout.factor_count))
    innovations = np.zeros((N, G))
    traces = np.zeros(N)

    for n in range(D, N):
        mean = mean @ At
        P = A @ P @ At + Q
        P = 0.5 * (P + P.transpose(0, 2, 1))

        h[:, 0::2] = data[n - lags, causes]
        Ph = np.einsum("gij,gj->gi", P, h)
        s = np.einsum("gi,gi->g", h, Ph) + r
        traces[n] = s.sum()
        if not np.all(np.isfinite(s) & (s > 0)):
            raise SingularInnovationCovariance("innovation covariance is not positive definite", n)
        innov = data[n] - np.einsum("gi,gi->g", h, mean)
        K = Ph / s[:, None]
        mean = mean + K * innov[:, None]
        IKh = eye - K[:, :, None] * h[:, None, :]
        P = IKh @ P @ IKh.transpose(0, 2, 1) + r * K[:, :, None] * K[:, None, :]
        P = 0.5 * (P + P.transpose(0, 2, 1))

        innovations[n] = innov
        values[n] = mean[:, 0::2].ravel()
        slopes[n] = mean[:, 1::2].ravel()
    return StateTrajectory(values, slopes, innovations, traces, layout)
