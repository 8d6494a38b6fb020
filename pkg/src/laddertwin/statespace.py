"""Augmented state-space construction.

Every causal factor occupies a 2-wide slot in the state vector: its value at
offset 0 and its slope at offset 1. Factor ``f`` therefore lives at state
indices ``2f`` and ``2f + 1``.

Factor ordering is effect-major. For each effect channel ``k`` the slot list is
its structural causes (ascending, skipping ``k``), then every lag-1 cause in
ascending order, then lag 2, and so on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import block_diag

from .errors import IncompleteWindow, InvalidDimension
from .model import FactorId, FactorKind, Hyperparameters

__all__ = [
    "FactorId",
    "FactorKind",
    "StateLayout",
    "TransitionModel",
    "state_layout",
    "build_transition",
    "build_observation",
]


def factor_count(n_channels: int, lag_order: int) -> int:
    return n_channels * ((lag_order + 1) * n_channels - 1)


@dataclass(frozen=True, eq=False)
class StateLayout:
    n_channels: int
    lag_order: int
    entries: tuple[FactorId, ...]
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {fid: i for i, fid in enumerate(self.entries)})

    @property
    def factor_count(self) -> int:
        return len(self.entries)

    @property
    def state_dim(self) -> int:
        return 2 * len(self.entries)

    @property
    def per_channel(self) -> int:
        """Number of factors in each effect channel's block."""
        return (self.lag_order + 1) * self.n_channels - 1

    def index_of(self, fid: FactorId) -> int:
        return self._index[fid]

    def block(self, effect: int) -> slice:
        """Factor indices belonging to one effect channel (contiguous)."""
        m = self.per_channel
        return slice(effect * m, (effect + 1) * m)

    def count(self, kind: FactorKind) -> int:
        return sum(1 for fid in self.entries if fid.kind is kind)

    def value_columns(self) -> np.ndarray:
        return np.arange(0, self.state_dim, 2)

    def __eq__(self, other):
        if not isinstance(other, StateLayout):
            return NotImplemented
        return self.entries == other.entries and self.n_channels == other.n_channels

    def __hash__(self):
        return hash(self.entries)


def state_layout(n_channels: int, lag_order: int) -> StateLayout:
    if n_channels < 1 or lag_order < 1:
        raise InvalidDimension(f"need G >= 1 and D >= 1, got G={n_channels}, D={lag_order}")
    entries = []
    for k in range(n_channels):
        entries.extend(FactorId(k, j, 0) for j in range(n_channels) if j != k)
        for d in range(1, lag_order + 1):
            entries.extend(FactorId(k, j, d) for j in range(n_channels))
    assert len(entries) == factor_count(n_channels, lag_order)
    return StateLayout(n_channels, lag_order, tuple(entries))


@dataclass(frozen=True, eq=False)
class TransitionModel:
    A: np.ndarray
    Q: np.ndarray


def transition_blocks(hyper: Hyperparameters) -> tuple[np.ndarray, np.ndarray]:
    """The 2x2 transition block and its process-noise covariance."""
    a0 = np.array([[hyper.alpha, hyper.beta], [0.0, hyper.gamma]])
    d0 = np.diag([hyper.delta, hyper.epsilon])
    q0 = hyper.process_noise_variance * d0 @ d0.T
    return a0, q0


def build_transition(hyper: Hyperparameters, layout: StateLayout) -> TransitionModel:
    a0, q0 = transition_blocks(hyper)
    n = layout.factor_count
    return TransitionModel(A=block_diag(*([a0] * n)), Q=block_diag(*([q0] * n)))


class _ObservationIndex:
    """Precomputed scatter indices so H[n] is built with one fancy-index write."""

    def __init__(self, layout: StateLayout):
        ids = np.array(layout.entries, dtype=int).reshape(-1, 3)
        self.rows = ids[:, 0]
        self.cols = 2 * np.arange(layout.factor_count)
        self.causes = ids[:, 1]
        self.lags = ids[:, 2]
        self.shape = (layout.n_channels, layout.state_dim)
        self.lag_order = layout.lag_order


@lru_cache(maxsize=32)
def _observation_index(layout: StateLayout) -> _ObservationIndex:
    return _ObservationIndex(layout)


def build_observation(window: np.ndarray, layout: StateLayout) -> np.ndarray:
    """Observation matrix H[n] for one sample.

    Parameters
    ----------
    window : array, shape (D+1, G)
        Samples ``y[n-D], ..., y[n-1], y[n]`` in chronological order, so
        ``window[-1]`` is the current sample.
    layout : StateLayout

    Returns
    -------
    H : array, shape (G, 2F)
        Row ``k`` carries channel ``k``'s regressors in the value columns of
        its own factor block; slope columns are zero.
    """
    window = np.asarray(window, dtype=float)
    d = layout.lag_order
    if window.ndim != 2 or window.shape[0] < d + 1 or window.shape[1] != layout.n_channels:
        raise IncompleteWindow(
            f"need {d + 1} samples of {layout.n_channels} channels, got shape {window.shape}"
        )
    window = window[-(d + 1):]
    idx = _observation_index(layout)
    H = np.zeros(idx.shape)
    H[idx.rows, idx.cols] = window[d - idx.lags, idx.causes]
    return H
