"""Noninteractive locally private ERM for generalized linear losses."""

from ldperm.approx import (
    BernsteinPoly,
    SmoothingParams,
    bernstein_basis,
    bernstein_interpolate,
    build_derivative_poly,
    iterated_bernstein,
    smoothed_hinge,
    smoothed_plus,
)
from ldperm.errors import (
    ConstructionError,
    DomainError,
    InvariantViolation,
    NormViolation,
    SizingError,
    SolverAbort,
)
from ldperm.losses import CATALOG, GenLinLoss, get_loss
from ldperm.oracle import OracleSample, certify, genlin_gradient, hinge_gradient
from ldperm.privacy import NoisePlan, PlayerReport, PrivacyBudget, plan_noise, randomize_player
from ldperm.solver import SolverConfig, Trace, project_ball, run_sigm

__version__ = "0.1.0"

__all__ = [
    "BernsteinPoly",
    "CATALOG",
    "ConstructionError",
    "DomainError",
    "GenLinLoss",
    "InvariantViolation",
    "NoisePlan",
    "NormViolation",
    "OracleSample",
    "PlayerReport",
    "PrivacyBudget",
    "SizingError",
    "SmoothingParams",
    "SolverAbort",
    "SolverConfig",
    "Trace",
    "bernstein_basis",
    "bernstein_interpolate",
    "build_derivative_poly",
    "certify",
    "genlin_gradient",
    "get_loss",
    "hinge_gradient",
    "iterated_bernstein",
    "plan_noise",
    "project_ball",
    "randomize_player",
    "run_sigm",
    "smoothed_hinge",
    "smoothed_plus",
]
