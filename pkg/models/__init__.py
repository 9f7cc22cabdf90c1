"""
Models Module

Score models (score + unnormalised log-density), the Hermite-basis kernel
exponential family, the two-component mixture and the plug-in densities that
feed the mode-sensitivity weight.
"""

from .hermite import hermite_basis
from .score_models import (
    ScoreModel,
    ExponentialFamilyDecomposition,
    ExponentialFamilyModel,
    GaussianLocationModel,
    KEFSpec,
    KernelExponentialFamily,
    TwoComponentMixture,
    as_points,
    gaussian_location_model,
    two_component_mixture,
    kef_model,
    weight_to_theta,
)
from .plugin import (
    PluginDensity,
    kde_plugin,
    model_plugin,
    reference_plugin,
    tracking_plugin,
    silverman_bandwidth,
)

__all__ = [
    "hermite_basis",
    "ScoreModel",
    "ExponentialFamilyDecomposition",
    "ExponentialFamilyModel",
    "GaussianLocationModel",
    "KEFSpec",
    "KernelExponentialFamily",
    "TwoComponentMixture",
    "as_points",
    "gaussian_location_model",
    "two_component_mixture",
    "kef_model",
    "weight_to_theta",
    "PluginDensity",
    "kde_plugin",
    "model_plugin",
    "reference_plugin",
    "tracking_plugin",
    "silverman_bandwidth",
]
