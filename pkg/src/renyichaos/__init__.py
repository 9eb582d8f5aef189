"""Numerical laboratory for Renyi propagation of chaos in mean-field particle systems."""

from .model import CosinePerturbation, ModelParams, ParticleConfiguration
from .gaussian import (
    DIVERGENT,
    KL_LIMIT,
    DenseCovariance,
    ExchangeableCovariance,
    ExchangeableGaussian,
    GaussianSpec,
    ScaledIdentity,
    is_divergent,
)
from .reports import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "CosinePerturbation",
    "DIVERGENT",
    "DenseCovariance",
    "ExchangeableCovariance",
    "ExchangeableGaussian",
    "GaussianSpec",
    "KL_LIMIT",
    "ModelParams",
    "ParticleConfiguration",
    "ScaledIdentity",
    "VerificationReport",
    "is_divergent",
]
