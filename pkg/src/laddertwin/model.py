"""Domain types shared by every other module.

Matrix convention: ``structural[i, j]`` and ``lagged[d-1][i, j]`` hold the
causal factor from cause channel ``j`` to effect channel ``i`` (row = effect).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFinite, SelfStructuralCausality


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def default_channel_names(count: int, prefix: str = "y") -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(count))


class FactorKind(str, enum.Enum):
    SNL = "SNL"  # self-node lagged
    INL = "INL"  # inter-node lagged
    INS = "INS"  # inter-node structural (instantaneous)


class FactorId(NamedTuple):
    """One causal factor: ``cause`` channel at ``lag`` samples back drives ``effect``."""

    effect: int
    cause: int
    lag: int

    @property
    def kind(self) -> FactorKind:
        if self.lag == 0:
            return FactorKind.INS
        return FactorKind.SNL if self.effect == self.cause else FactorKind.INL


@dataclass(frozen=True, eq=False)
class MultiChannelSeries:
    """An N x G block of real samples, one column per channel."""

    data: np.ndarray
    channel_names: tuple[str, ...] = ()
    sample_interval: float | None = None

    def __post_init__(self):
        data = _frozen_array(self.data, 2, "data")
        n, g = data.shape
        if n < 1 or g < 1:
            raise DimensionMismatch(f"series needs at least one sample and one channel, got {data.shape}")
        if not np.all(np.isfinite(data)):
            row, col = np.argwhere(~np.isfinite(data))[0]
            raise NonFinite(f"non-finite sample at row {row}, channel {col}")
        names = tuple(self.channel_names) if len(self.channel_names) else default_channel_names(g)
        if len(names) != g:
            raise DimensionMismatch(f"{len(names)} channel names for {g} channels")
        if len(set(names)) != g:
            raise DimensionMismatch(f"channel names must be unique: {names}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray) -> MultiChannelSeries:
        return replace(self, data=data)


@dataclass(frozen=True, eq=False)
class CausalFactors:
    """Structural matrix S0 plus lagged matrices S1..SD, rows = effects."""

    structural: np.ndarray
    lagged: tuple[np.ndarray, ...]
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        structural = _frozen_array(self.structural, 2, "structural")
        lagged = tuple(_frozen_array(m, 2, f"lagged[{d}]") for d, m in enumerate(self.lagged))
        g = structural.shape[0]
        names = tuple(self.channel_names) if len(self.channel_names) else default_channel_names(g)
        object.__setattr__(self, "structural", structural)
        object.__setattr__(self, "lagged", lagged)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    @property
    def lag_order(self) -> int:
        return len(self.lagged)

    def value(self, fid: FactorId) -> float:
        m = self.structural if fid.lag == 0 else self.lagged[fid.lag - 1]
        return float(m[fid.effect, fid.cause])

    def stacked(self) -> np.ndarray:
        """All matrices as a (D+1, G, G) array, structural first."""
        return np.stack((self.structural,) + self.lagged)

    def equals(self, other: CausalFactors) -> bool:
        return (
            self.channel_names == other.channel_names
            and self.lag_order == other.lag_order
            and np.array_equal(self.stacked(), other.stacked())
        )

    def map_values(self, fn) -> CausalFactors:
        """Apply ``fn`` elementwise to every matrix and return new factors."""
        return CausalFactors(
            structural=fn(self.structural),
            lagged=tuple(fn(m) for m in self.lagged),
            channel_names=self.channel_names,
        )

    @classmethod
    def zeros(cls, n_channels: int, lag_order: int = 1, channel_names: Sequence[str] = ()) -> CausalFactors:
        return cls(
            np.zeros((n_channels, n_channels)),
            tuple(np.zeros((n_channels, n_channels)) for _ in range(lag_order)),
            tuple(channel_names),
        )


def validate_factors(f: CausalFactors) -> CausalFactors:
    """Check shapes, finiteness and the zero structural diagonal; return ``f`` unchanged."""
    g = len(f.channel_names)
    for name, m in [("structural", f.structural)] + [(f"lagged[{d}]", m) for d, m in enumerate(f.lagged)]:
        if m.shape != (g, g):
            raise DimensionMismatch(f"{name} has shape {m.shape}, expected {(g, g)}")
        if not np.all(np.isfinite(m)):
            raise NonFinite(f"{name} contains non-finite entries")
    diag = np.diag(f.structural)
    if np.any(diag != 0):
        k = int(np.flatnonzero(diag)[0])
        raise SelfStructuralCausality(
            f"structural[{k}, {k}] = {diag[k]!r}; a channel cannot instantaneously cause itself"
        )
    return f


@dataclass(frozen=True)
class Hyperparameters:
    """Value/slope dynamics shared by every factor.

    Transition block ``[[alpha, beta], [0, gamma]]``, noise loading
    ``diag(delta, epsilon)``. The defaults make the slope the per-sample
    increment of the value (``gamma = 0``), so each factor's value is a random
    walk with step variance ``process_noise_variance``. With no process noise
    the filter reduces to recursive least squares.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    delta: float = 0.0
    epsilon: float = 1.0
    process_noise_variance: float = 1e-4
    measurement_noise_variance: float = 1.0
    initial_state_variance: float = 1e3

    def __post_init__(self):
        values = [self.alpha, self.beta, self.gamma, self.delta, self.epsilon,
                  self.process_noise_variance, self.measurement_noise_variance,
                  self.initial_state_variance]
        if not all(np.isfinite(values)):
            raise NonFinite("hyperparameters must be finite")
        if self.process_noise_variance < 0:
            raise ValueError("process_noise_variance must be >= 0")
        if self.measurement_noise_variance <= 0:
            raise ValueError("measurement_noise_variance must be > 0")
        if self.initial_state_variance <= 0:
            raise ValueError("initial_state_variance must be > 0")

    @classmethod
    def integrated_random_walk(cls, process_noise_variance: float = 1e-4, **kw) -> Hyperparameters:
        """Slope is itself a random walk and integrates into the value.

        Factors then follow local linear trends; tail averages of such a
        filter do not converge to the constant-coefficient least-squares fit.
        """
        return cls(alpha=1.0, beta=1.0, gamma=1.0, delta=0.0, epsilon=1.0,
                   process_noise_variance=process_noise_variance, **kw)

    @classmethod
    def random_walk(cls, process_noise_variance: float = 1e-4, **kw) -> Hyperparameters:
        """Value-only random walk; the slope slot stays inert at zero."""
        return cls(alpha=1.0, beta=0.0, gamma=1.0, delta=1.0, epsilon=0.0,
                   process_noise_variance=process_noise_variance, **kw)


@dataclass(frozen=True)
class EstimationConfig:
    lag_order: int = 1
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    tail_window: int = 5000
    threshold: float = 0.1
    standardize: bool = True

    def __post_init__(self):
        if self.lag_order < 1:
            raise ValueError("lag_order must be >= 1")
        if self.tail_window < 1:
            raise ValueError("tail_window must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
