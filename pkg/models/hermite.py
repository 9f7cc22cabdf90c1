"""
Scaled Hermite basis used by the kernel exponential family.

φ_j(x) = x^j / sqrt(j!) * exp(-x^2 / 2),   j = 0..p-1

The monomial part r_j = x^j / sqrt(j!) is built by the multiplicative
recurrence r_{j+1} = r_j * x / sqrt(j + 1), so no factorial is ever formed.
"""

import numpy as np

from validation.errors import InputError


def hermite_basis(p: int, x):
    """
    Evaluate the basis and its derivative.

    φ'_j(x) = (j x^(j-1) - x^(j+1)) / sqrt(j!) * exp(-x^2 / 2)
            = (sqrt(j) r_{j-1} - x r_j) * exp(-x^2 / 2)

    Args:
        p: Number of basis functions (>= 1)
        x: Scalar or 1-d array of evaluation points

    Returns:
        Tuple (phi, dphi); each has shape (p,) for scalar x, else (n, p)

    Raises:
        InputError: If p < 1
    """
    if int(p) != p or p < 1:
        raise InputError(f"Basis size p must be an integer >= 1, got {p}")
    p = int(p)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))

    r = np.empty((x.shape[0], p))
    r[:, 0] = 1.0
    for j in range(1, p):
        r[:, j] = r[:, j - 1] * x / np.sqrt(j)

    envelope = np.exp(-0.5 * x ** 2)[:, None]
    lower = np.zeros_like(r)
    if p > 1:
        lower[:, 1:] = np.sqrt(np.arange(1, p))[None, :] * r[:, :-1]
    phi = r * envelope
    dphi = (lower - x[:, None] * r) * envelope

    if scalar:
        return phi[0], dphi[0]
    return phi, dphi
