"""
Stein Kernels

Langevin Stein kernel of a base kernel k and a score s:

    k_p(x, y) = tr(∇_x ∇_y^T k) + <s(x), ∇_y k> + <s(y), ∇_x k> + <s(x), s(y)> k(x, y)

and its weighted version k_p^γ(x, y) = ω(x) ω(y) k_p(x, y).

The pairwise form works on whole blocks of precomputed kernel tensors so the
double sum in the discrepancy estimators stays vectorised.
"""

import numpy as np

from kernels import KernelDerivativeBundle
from validation.errors import InputError


def _as_vector(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float)).ravel()


def stein_kernel(x, y, score_x, score_y, bundle: KernelDerivativeBundle) -> float:
    """
    Evaluate the Stein kernel at one pair.

    Args:
        x: First point (d-vector)
        y: Second point (d-vector)
        score_x: Score at x
        score_y: Score at y
        bundle: Base kernel derivatives at (x, y)

    Returns:
        k_p(x, y)

    Raises:
        InputError: On inconsistent dimensions
    """
    x = _as_vector(x)
    y = _as_vector(y)
    score_x = _as_vector(score_x)
    score_y = _as_vector(score_y)
    d = x.shape[0]
    for name, v in (("y", y), ("score_x", score_x), ("score_y", score_y),
                    ("grad_x", bundle.grad_x), ("grad_y", bundle.grad_y)):
        if np.shape(v)[0] != d:
            raise InputError(f"Dimension mismatch in Stein kernel: {name} has d={np.shape(v)[0]}, expected {d}")
    return float(
        bundle.cross_trace
        + score_x @ bundle.grad_y
        + score_y @ bundle.grad_x
        + (score_x @ score_y) * bundle.value
    )


def weighted_stein_kernel(x, y, score_x, score_y, bundle: KernelDerivativeBundle,
                          w_x: float, w_y: float) -> float:
    """
    Evaluate the weighted Stein kernel ω(x) ω(y) k_p(x, y).

    Args:
        x, y, score_x, score_y, bundle: As for stein_kernel
        w_x: Weight at x (> 0)
        w_y: Weight at y (> 0)

    Returns:
        k_p^γ(x, y)

    Raises:
        InputError: If a weight is not strictly positive
    """
    if not (w_x > 0 and w_y > 0):
        raise InputError(f"Stein kernel weights must be positive, got w_x={w_x}, w_y={w_y}")
    return w_x * w_y * stein_kernel(x, y, score_x, score_y, bundle)


def stein_kernel_block(K: np.ndarray, grad_x: np.ndarray, grad_y: np.ndarray,
                       cross_trace: np.ndarray, score_rows: np.ndarray,
                       score_cols: np.ndarray) -> np.ndarray:
    """
    Stein kernel over a block of pairs.

    Args:
        K: Kernel values, shape (r, m)
        grad_x: ∇_x k, shape (r, m, d)
        grad_y: ∇_y k, shape (r, m, d)
        cross_trace: Mixed-derivative traces, shape (r, m)
        score_rows: Scores at the row points, shape (r, d)
        score_cols: Scores at the column points, shape (m, d)

    Returns:
        Array of shape (r, m)
    """
    return (
        cross_trace
        + np.einsum("id,ijd->ij", score_rows, grad_y)
        + np.einsum("jd,ijd->ij", score_cols, grad_x)
        + (score_rows @ score_cols.T) * K
    )
