"""
Numerical Invariant Checks

Reusable checks for the quantities the library produces: symmetric and
positive semi-definite matrices, normalised density curves, mode reports and
the conjugate posterior precision identity. All functions raise
AssertionError with a descriptive message when an invariant is violated.
"""

from typing import Any, Optional

import numpy as np
from scipy.integrate import trapezoid


def check_symmetric(matrix: np.ndarray, name: str = "matrix", tol: float = 1e-12) -> None:
    """
    Validate that a square matrix is symmetric to tol (relative to its largest entry).

    Raises:
        AssertionError: When the matrix is not square or not symmetric
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise AssertionError(f"{name} must be square, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.T)))
    if asym > tol * scale:
        i, j = np.unravel_index(np.argmax(np.abs(M - M.T)), M.shape)
        raise AssertionError(
            f"Symmetry invariant violated for {name}!\n"
            f"  Largest asymmetry: {asym:.3e} at ({i}, {j})\n"
            f"  Tolerance: {tol * scale:.3e}"
        )


def check_positive_semidefinite(matrix: np.ndarray, name: str = "matrix", tol: float = 1e-10) -> None:
    """
    Validate that a symmetric matrix has no eigenvalue below -tol.

    Raises:
        AssertionError: When the smallest eigenvalue is below -tol
    """
    check_symmetric(matrix, name, tol=max(tol, 1e-12))
    M = np.asarray(matrix, dtype=float)
    smallest = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    if smallest < -tol:
        raise AssertionError(
            f"PSD invariant violated for {name}!\n"
            f"  Smallest eigenvalue: {smallest:.3e}\n"
            f"  Tolerance: {-tol:.3e}"
        )


def check_density_normalised(grid: np.ndarray, density: np.ndarray, tol: float = 1e-3,
                             name: str = "density") -> None:
    """
    Validate a density curve: non-negative, finite and integrating to 1 by the trapezoid rule.

    Raises:
        AssertionError: When any check fails
    """
    x = np.asarray(grid, dtype=float)
    f = np.asarray(density, dtype=float)
    if x.shape != f.shape:
        raise AssertionError(f"{name}: grid shape {x.shape} does not match density shape {f.shape}")
    if not np.all(np.diff(x) > 0):
        raise AssertionError(f"{name}: grid is not strictly ascending")
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise AssertionError(f"{name}: density has negative or non-finite values")
    total = float(trapezoid(f, x))
    if abs(total - 1.0) > tol:
        raise AssertionError(
            f"Normalisation invariant violated for {name}!\n"
            f"  Integral: {total:.6f}\n"
            f"  Tolerance: {tol}"
        )


def check_mode_report(report: Any, tol: float = 1e-9) -> None:
    """
    Validate a ModeReport.

    Checks:
    1. mode_count matches the number of locations
    2. Locations strictly ascending
    3. Prominences at least the threshold (the single fallback mode excepted)
    4. Masses non-negative and summing to 1

    Raises:
        AssertionError: When any invariant is violated
    """
    locations = np.asarray(report.locations, dtype=float)
    masses = np.asarray(report.masses, dtype=float)
    prominences = np.asarray(report.prominences, dtype=float)

    if report.mode_count != locations.shape[0] or report.mode_count < 1:
        raise AssertionError(f"Mode count {report.mode_count} does not match {locations.shape[0]} locations")
    if np.any(np.diff(locations) <= 0):
        raise AssertionError(f"Mode locations are not strictly ascending: {locations.tolist()}")
    if np.any(prominences < report.threshold - tol):
        raise AssertionError(
            f"Mode prominence below threshold {report.threshold}: {prominences.tolist()}"
        )
    if np.any(masses < -tol) or abs(float(masses.sum()) - 1.0) > 1e-6:
        raise AssertionError(
            f"Mode mass invariant violated!\n"
            f"  Masses: {masses.tolist()}\n"
            f"  Sum: {float(masses.sum()):.9f}"
        )


def check_posterior_precision(prior: Any, coeffs: Any, posterior: Any, alpha: float,
                              n: Optional[int] = None, tol: float = 1e-10) -> None:
    """
    Validate Σ_n^-1 = Σ0^-1 + 2 α n Γ_n for a conjugate posterior.

    Raises:
        AssertionError: When the identity fails beyond tol (relative to the largest entry)
    """
    n = coeffs.n if n is None else n
    expected = np.linalg.inv(prior.Sigma0) + 2.0 * alpha * n * coeffs.Gamma_n
    actual = np.linalg.inv(posterior.Sigma_n)
    scale = max(1.0, float(np.max(np.abs(expected))))
    diff = float(np.max(np.abs(actual - expected)))
    if diff > tol * scale:
        raise AssertionError(
            f"Posterior precision invariant violated!\n"
            f"  Max abs difference: {diff:.3e}\n"
            f"  Tolerance: {tol * scale:.3e}"
        )


def check_discrepancy_value(value: float, tol: float = 1e-12, name: str = "KSD^2") -> None:
    """
    Validate a squared discrepancy: finite and non-negative up to rounding.

    Raises:
        AssertionError: When the value is non-finite or below -tol
    """
    if not np.isfinite(value):
        raise AssertionError(f"{name} is not finite: {value}")
    if value < -tol:
        raise AssertionError(f"{name} is negative beyond rounding: {value:.3e} (tol={tol})")
