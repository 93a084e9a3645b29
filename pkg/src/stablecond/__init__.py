"""Monte Carlo and quadrature toolkit for stable Levy processes conditioned to
stay positive or to avoid the origin."""

from .estimates import MCEstimate
from .killing import KillKind, KillSpec, survival_probability
from .stable import GridSpec, RngStream, StableParams, simulate_path
from .transforms import HKind, Rejection, TransformKind, WeightedRatio, entrance_approximation, meander_estimate

__all__ = [
    "GridSpec",
    "HKind",
    "KillKind",
    "KillSpec",
    "MCEstimate",
    "Rejection",
    "RngStream",
    "StableParams",
    "TransformKind",
    "WeightedRatio",
    "entrance_approximation",
    "meander_estimate",
    "simulate_path",
    "survival_probability",
]
