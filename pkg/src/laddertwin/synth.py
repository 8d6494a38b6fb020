"""Generative structural VAR simulator.

Draws ``y[n] = (I - S0)^-1 (sum_d Sd y[n-d] + B e[n])`` with ``e[n]`` i.i.d.
standard normal and ``B = diag(noise_scale)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, SingularStructure, UnstableModel
from .model import CausalFactors, MultiChannelSeries, validate_factors

_MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class SynthSpec:
    factors: CausalFactors
    noise_scale: Sequence[float] | float = 1.0
    length: int = 10_000
    seed: int | None = 0
    burn_in: int = 500
    initial: np.ndarray | None = None  # (D, G) starting samples, oldest first
    sample_interval: float | None = None


def _structural_inverse(factors: CausalFactors) -> np.ndarray:
    g = factors.n_channels
    m = np.eye(g) - factors.structural
    if np.linalg.cond(m) >= _MAX_CONDITION:
        raise SingularStructure("(I - S0) is singular or too ill-conditioned to invert")
    return np.linalg.inv(m)


def reduced_form(factors: CausalFactors) -> tuple[np.ndarray, list[np.ndarray]]:
    """``(I - S0)^-1`` and the reduced-form lag matrices ``(I - S0)^-1 Sd``."""
    inv = _structural_inverse(factors)
    return inv, [inv @ s for s in factors.lagged]


def companion_matrix(lag_mats: Sequence[np.ndarray]) -> np.ndarray:
    D = len(lag_mats)
    g = lag_mats[0].shape[0]
    comp = np.zeros((D * g, D * g))
    comp[:g, :] = np.hstack(lag_mats)
    comp[g:, :-g] = np.eye((D - 1) * g)
    return comp


def stability_check(factors: CausalFactors) -> float:
    """Spectral radius of the reduced-form companion matrix."""
    _, lag_mats = reduced_form(factors)
    if not lag_mats:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(lag_mats)))))


def simulate(spec: SynthSpec) -> MultiChannelSeries:
    factors = validate_factors(spec.factors)
    g, D = factors.n_channels, factors.lag_order
    inv, lag_mats = reduced_form(factors)
    radius = stability_check(factors)
    if radius >= 1.0:
        raise UnstableModel(radius)

    scale = np.broadcast_to(np.asarray(spec.noise_scale, dtype=float), (g,))
    if np.any(scale < 0):
        raise ValueError("noise scales must be non-negative")
    if spec.length < 1 or spec.burn_in < 0:
        raise ValueError("length must be >= 1 and burn_in >= 0")

    total = spec.length + spec.burn_in
    rng = np.random.default_rng(spec.seed)
    shocks = rng.standard_normal((total, g)) * scale @ inv.T

    y = np.zeros((total + D, g))
    if spec.initial is not None:
        init = np.asarray(spec.initial, dtype=float)
        if init.shape != (D, g):
            raise DimensionMismatch(f"initial must have shape {(D, g)}, got {init.shape}")
        y[:D] = init
    stacked = np.hstack(lag_mats)  # G x (D*G), lag 1 first
    for n in range(D, total + D):
        past = y[n - D:n][::-1].ravel()  # y[n-1], y[n-2], ...
        y[n] = stacked @ past + shocks[n - D]
    out = y[D + spec.burn_in:]
    return MultiChannelSeries(out, factors.channel_names, spec.sample_interval)
