"""
Base Reproducing Kernels

Translation-invariant base kernels with closed-form first derivatives and the
trace of the mixed second-derivative matrix, the ingredients of the Stein
kernel.

Supported kernels:
- IMQ:  k(x, y) = (c + ||x - y||^2)^(-beta),       c > 0, 0 < beta < 1
- RBF:  k(x, y) = exp(-||x - y||^2 / (2 * ell^2)), ell > 0

Usage:
    from kernels import BaseKernelSpec, kernel_value, kernel_derivatives

    spec = BaseKernelSpec.imq(c=1.0, beta=0.5)
    bundle = kernel_derivatives(spec, [0.0], [1.0])
    print(bundle.value, bundle.grad_x, bundle.cross_trace)
"""

from dataclasses import dataclass, asdict
from typing import Any, Dict, Literal, Tuple

import numpy as np

from validation.errors import InputError

KernelKind = Literal["imq", "rbf"]

DEFAULT_IMQ_C = 1.0
DEFAULT_IMQ_BETA = 0.5
DEFAULT_RBF_LENGTHSCALE = 1.0


@dataclass(frozen=True)
class BaseKernelSpec:
    """
    Base kernel specification.

    Attributes:
        kind: "imq" or "rbf"
        c: IMQ offset (c > 0)
        beta: IMQ exponent (0 < beta < 1)
        lengthscale: RBF lengthscale (> 0)
    """
    kind: KernelKind = "imq"
    c: float = DEFAULT_IMQ_C
    beta: float = DEFAULT_IMQ_BETA
    lengthscale: float = DEFAULT_RBF_LENGTHSCALE

    def __post_init__(self):
        """Validate kernel parameters."""
        if self.kind == "imq":
            if not self.c > 0:
                raise InputError(f"IMQ kernel requires c > 0, got {self.c}")
            if not 0 < self.beta < 1:
                raise InputError(f"IMQ kernel requires 0 < beta < 1, got {self.beta}")
        elif self.kind == "rbf":
            if not self.lengthscale > 0:
                raise InputError(f"RBF kernel requires lengthscale > 0, got {self.lengthscale}")
        else:
            raise InputError(f"Unknown kernel kind '{self.kind}'. Must be 'imq' or 'rbf'")

    @classmethod
    def imq(cls, c: float = DEFAULT_IMQ_C, beta: float = DEFAULT_IMQ_BETA) -> "BaseKernelSpec":
        """Build an IMQ kernel spec."""
        return cls(kind="imq", c=float(c), beta=float(beta))

    @classmethod
    def rbf(cls, lengthscale: float = DEFAULT_RBF_LENGTHSCALE) -> "BaseKernelSpec":
        """Build an RBF kernel spec."""
        return cls(kind="rbf", lengthscale=float(lengthscale))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BaseKernelSpec":
        """
        Create a spec from a config dictionary.

        Args:
            data: Dictionary with "kind" plus kernel parameters
                  ("c", "beta" for IMQ; "lengthscale" or "ell" for RBF)

        Returns:
            BaseKernelSpec instance
        """
        kind = str(data.get("kind", "imq")).lower()
        if kind == "rbf":
            return cls.rbf(data.get("lengthscale", data.get("ell", DEFAULT_RBF_LENGTHSCALE)))
        if kind == "imq":
            return cls.imq(data.get("c", DEFAULT_IMQ_C), data.get("beta", DEFAULT_IMQ_BETA))
        raise InputError(f"Unknown kernel kind '{kind}'. Must be 'imq' or 'rbf'")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary holding only the active kernel's parameters."""
        if self.kind == "rbf":
            return {"kind": "rbf", "lengthscale": self.lengthscale}
        return {"kind": "imq", "c": self.c, "beta": self.beta}


@dataclass(frozen=True)
class KernelDerivativeBundle:
    """
    Kernel value and derivatives at a single pair (x, y).

    Attributes:
        value: k(x, y)
        grad_x: gradient of k in its first argument (d-vector)
        grad_y: gradient of k in its second argument (d-vector)
        cross_trace: trace of the mixed second-derivative matrix d^2 k / dx dy
    """
    value: float
    grad_x: np.ndarray
    grad_y: np.ndarray
    cross_trace: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-friendly dictionary."""
        data = asdict(self)
        data["grad_x"] = self.grad_x.tolist()
        data["grad_y"] = self.grad_y.tolist()
        return data


def _as_pair(x, y) -> Tuple[np.ndarray, np.ndarray]:
    """Coerce a pair of points to 1-d float arrays of equal dimension."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.ndim != 1 or y.ndim != 1:
        raise InputError(f"Points must be vectors, got shapes {x.shape} and {y.shape}")
    if x.shape != y.shape:
        raise InputError(f"Dimension mismatch: x has d={x.shape[0]}, y has d={y.shape[0]}")
    return x, y


def _as_points(X) -> np.ndarray:
    """Coerce a sample array to shape (n, d)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"Sample array must be (n,) or (n, d), got shape {X.shape}")
    return X


def _radial_terms(spec: BaseKernelSpec, sq_dist: np.ndarray, d: int):
    """
    Radial profile terms shared by the scalar and pairwise paths.

    Returns:
        Tuple of (k, h, cross_trace) where grad_x k = h * (x - y)
    """
    if spec.kind == "imq":
        base = spec.c + sq_dist
        k = base ** (-spec.beta)
        h = -2.0 * spec.beta * base ** (-spec.beta - 1.0)
        cross = (2.0 * spec.beta * d * base ** (-spec.beta - 1.0)
                 - 4.0 * spec.beta * (spec.beta + 1.0) * sq_dist * base ** (-spec.beta - 2.0))
    else:
        inv_l2 = 1.0 / spec.lengthscale ** 2
        k = np.exp(-0.5 * sq_dist * inv_l2)
        h = -inv_l2 * k
        cross = k * (d * inv_l2 - sq_dist * inv_l2 ** 2)
    return k, h, cross


def kernel_value(spec: BaseKernelSpec, x, y) -> float:
    """
    Evaluate k(x, y).

    Args:
        spec: Base kernel specification
        x: First point (d-vector or scalar)
        y: Second point (same dimension as x)

    Returns:
        Kernel value in (0, 1] for RBF and (0, c^-beta] for IMQ

    Raises:
        InputError: If x and y have different dimensions
    """
    x, y = _as_pair(x, y)
    diff = x - y
    sq_dist = float(diff @ diff)
    if spec.kind == "imq":
        return float((spec.c + sq_dist) ** (-spec.beta))
    return float(np.exp(-0.5 * sq_dist / spec.lengthscale ** 2))


def kernel_derivatives(spec: BaseKernelSpec, x, y) -> KernelDerivativeBundle:
    """
    Closed-form kernel value, gradients and cross-derivative trace at (x, y).

    Args:
        spec: Base kernel specification
        x: First point
        y: Second point

    Returns:
        KernelDerivativeBundle

    Raises:
        InputError: If x and y have different dimensions
    """
    x, y = _as_pair(x, y)
    diff = x - y
    sq_dist = float(diff @ diff)
    k, h, cross = _radial_terms(spec, sq_dist, x.shape[0])
    grad_x = h * diff
    return KernelDerivativeBundle(
        value=float(k),
        grad_x=grad_x,
        grad_y=-grad_x,
        cross_trace=float(cross),
    )


def finite_difference_oracle(spec: BaseKernelSpec, x, y, step: float = 1e-5) -> KernelDerivativeBundle:
    """
    Central finite-difference approximation of every bundle field.

    The cross trace uses the four-point mixed stencil
    [k(x+h e_i, y+h e_i) - k(x+h e_i, y-h e_i) - k(x-h e_i, y+h e_i) + k(x-h e_i, y-h e_i)] / (4 h^2).

    Args:
        spec: Base kernel specification
        x: First point
        y: Second point
        step: Finite-difference step (> 0)

    Returns:
        KernelDerivativeBundle of numerical approximations

    Raises:
        InputError: If step is not positive or dimensions mismatch
    """
    if not step > 0:
        raise InputError(f"Finite-difference step must be positive, got {step}")
    x, y = _as_pair(x, y)
    d = x.shape[0]
    grad_x = np.zeros(d)
    grad_y = np.zeros(d)
    cross = 0.0
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        grad_x[i] = (kernel_value(spec, x + e, y) - kernel_value(spec, x - e, y)) / (2 * step)
        grad_y[i] = (kernel_value(spec, x, y + e) - kernel_value(spec, x, y - e)) / (2 * step)
        cross += (kernel_value(spec, x + e, y + e) - kernel_value(spec, x + e, y - e)
                  - kernel_value(spec, x - e, y + e) + kernel_value(spec, x - e, y - e)) / (4 * step ** 2)
    return KernelDerivativeBundle(
        value=kernel_value(spec, x, y),
        grad_x=grad_x,
        grad_y=grad_y,
        cross_trace=float(cross),
    )


def gram_matrix(spec: BaseKernelSpec, X, Y=None) -> np.ndarray:
    """
    Kernel Gram matrix K[i, j] = k(X[i], Y[j]).

    Args:
        spec: Base kernel specification
        X: Points, shape (n, d) or (n,)
        Y: Points, shape (m, d) or (m,); defaults to X

    Returns:
        Array of shape (n, m)
    """
    X = _as_points(X)
    Y = X if Y is None else _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"Dimension mismatch: X has d={X.shape[1]}, Y has d={Y.shape[1]}")
    diff = X[:, None, :] - Y[None, :, :]
    sq_dist = np.einsum("ijd,ijd->ij", diff, diff)
    k, _, _ = _radial_terms(spec, sq_dist, X.shape[1])
    return k


def pairwise_derivatives(spec: BaseKernelSpec, X, Y=None):
    """
    Vectorised kernel derivatives over all pairs.

    Args:
        spec: Base kernel specification
        X: Points, shape (n, d) or (n,)
        Y: Points, shape (m, d) or (m,); defaults to X

    Returns:
        Tuple (K, grad_x, grad_y, cross_trace) with shapes
        (n, m), (n, m, d), (n, m, d), (n, m)
    """
    X = _as_points(X)
    Y = X if Y is None else _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"Dimension mismatch: X has d={X.shape[1]}, Y has d={Y.shape[1]}")
    diff = X[:, None, :] - Y[None, :, :]
    sq_dist = np.einsum("ijd,ijd->ij", diff, diff)
    k, h, cross = _radial_terms(spec, sq_dist, X.shape[1])
    grad_x = h[:, :, None] * diff
    return k, grad_x, -grad_x, cross
