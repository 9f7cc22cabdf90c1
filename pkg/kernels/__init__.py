"""
Kernels Module

Base reproducing kernels (IMQ, RBF) with analytic first derivatives and the
cross-derivative trace used by the Stein kernel.
"""

from .base_kernels import (
    BaseKernelSpec,
    KernelDerivativeBundle,
    kernel_value,
    kernel_derivatives,
    finite_difference_oracle,
    gram_matrix,
    pairwise_derivatives,
)

__all__ = [
    "BaseKernelSpec",
    "KernelDerivativeBundle",
    "kernel_value",
    "kernel_derivatives",
    "finite_difference_oracle",
    "gram_matrix",
    "pairwise_derivatives",
]
