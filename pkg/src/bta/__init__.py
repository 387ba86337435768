"""Bayesian theory averaging: latent theory indices built from model-averaged
proxy regressions, driving several non-Gaussian outcome equations."""

__version__ = "0.1.0"

from .engine import PAPER_SCALE, PosteriorSummary, RunConfig, initial_state, run_chains, summarize, sweep
from .errors import (
    BTAError,
    DataError,
    DegenerateScale,
    NumericalSingularity,
    ShapeTooSmall,
    SupportViolation,
)
from .model import ChainState, Dataset, Family, GammaStatus, ModelSpec, Outcome, Theory, validate_state

__all__ = [
    "BTAError", "ChainState", "DataError", "Dataset", "DegenerateScale", "Family", "GammaStatus",
    "ModelSpec", "NumericalSingularity", "Outcome", "PAPER_SCALE", "PosteriorSummary", "RunConfig",
    "ShapeTooSmall", "SupportViolation", "Theory", "initial_state", "run_chains", "summarize", "sweep",
    "validate_state",
]
