"""Structural VAR causal factors via a time-varying Kalman filter, analysed as ladder graphs."""

from .errors import LadderTwinError
from .kalman import FilterState, StateTrajectory, predict, run_filter, update
from .ladder import (
    FeedbackLoop,
    LadderEdge,
    LadderGraph,
    Proposition,
    build_ladder,
    detect_feedback_loops,
    detect_structural_cycles,
    detect_x_patterns,
    generate_propositions,
)
from .model import (
    CausalFactors,
    EstimationConfig,
    FactorId,
    FactorKind,
    Hyperparameters,
    MultiChannelSeries,
    validate_factors,
)
from .pipeline import EstimationResult, estimate, ols_oracle, standardize, tail_average, threshold_factors
from .render import RenderStyle, render_dot, render_svg
from .statespace import StateLayout, build_observation, build_transition, state_layout
from .synth import SynthSpec, simulate, stability_check

__version__ = "0.1.0"
