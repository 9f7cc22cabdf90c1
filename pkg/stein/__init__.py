"""
Stein Module

Mode-sensitivity weights, the standard and weighted Stein kernels and the
empirical (MS-)KSD estimators with θ-independent Gram caching.

Usage:
    from kernels import BaseKernelSpec
    from models import gaussian_location_model, kde_plugin
    from stein import WeightSpec, ksd_squared

    model = gaussian_location_model()
    value = ksd_squared(data, model, theta=[0.0],
                        base=BaseKernelSpec.imq(),
                        weight=WeightSpec.log_reciprocal(gamma=1.0, epsilon=0.1),
                        weight_density=kde_plugin(data))
"""

from .weights import WeightSpec, weight_value, weight_values
from .stein_kernel import stein_kernel, weighted_stein_kernel, stein_kernel_block
from .discrepancy import (
    SteinGram,
    DiscrepancyValue,
    precompute_gram,
    pointwise_weights,
    ksd_squared,
    ksd_squared_minibatch,
)

__all__ = [
    "WeightSpec",
    "weight_value",
    "weight_values",
    "stein_kernel",
    "weighted_stein_kernel",
    "stein_kernel_block",
    "SteinGram",
    "DiscrepancyValue",
    "precompute_gram",
    "pointwise_weights",
    "ksd_squared",
    "ksd_squared_minibatch",
]
