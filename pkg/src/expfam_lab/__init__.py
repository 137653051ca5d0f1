"""Exponential-family duality, MLE/MAP risk and stochastic mirror descent experiments."""

from .core import (DomainError, ExponentialFamily, NumericalFailure, bregman_dual, bregman_primal, kl,
                   symmetrized_bregman, symmetrized_inner)
from .families import (CategoricalFamily, FullGaussian1DFamily, GammaKnownShapeFamily, GaussianCovarianceFamily,
                       QuadraticFamily, family_catalog, get_family)

__all__ = [
    "CategoricalFamily", "DomainError", "ExponentialFamily", "FullGaussian1DFamily", "GammaKnownShapeFamily",
    "GaussianCovarianceFamily", "NumericalFailure", "QuadraticFamily", "bregman_dual", "bregman_primal",
    "family_catalog", "get_family", "kl", "symmetrized_bregman", "symmetrized_inner",
]
