"""
Synthetic Data Generation for Testing

Deterministic synthetic datasets for tests and quick checks: two-component
Gaussian mixtures, a bimodal expression-like series and random point sets
for kernel oracles.

All functions use seeded numpy Generators for reproducibility.
"""

from typing import Optional, Tuple

import numpy as np

from .errors import InputError


def generate_mixture_series(
    n: int = 500,
    means: Tuple[float, float] = (-3.0, 3.0),
    sd: float = 1.0,
    weight: float = 0.5,
    seed: Optional[int] = 42,
    exact_split: bool = True
) -> np.ndarray:
    """
    Generate a two-component equal-variance Gaussian mixture series.

    Args:
        n: Number of values
        means: Component means
        sd: Common component sd
        weight: Proportion of the first component
        seed: Random seed for reproducibility
        exact_split: Use exactly round(weight * n) first-component values
                     instead of drawing the labels

    Returns:
        Array of shape (n,), components shuffled together
    """
    if not 0.0 <= weight <= 1.0:
        raise InputError(f"weight must lie in [0, 1], got {weight}")
    rng = np.random.default_rng(seed)
    if exact_split:
        first = np.zeros(n, dtype=bool)
        first[: int(round(weight * n))] = True
        rng.shuffle(first)
    else:
        first = rng.random(n) < weight
    centers = np.where(first, means[0], means[1])
    return centers + sd * rng.standard_normal(n)


def generate_expression_surrogate(
    n_low: int = 120,
    n_high: int = 80,
    low: float = 6.0,
    high: float = 10.0,
    sd: float = 0.8,
    seed: Optional[int] = 42
) -> np.ndarray:
    """
    Generate a bimodal series shaped like log-scale gene expression.

    Args:
        n_low: Values in the low-expression group
        n_high: Values in the high-expression group
        low: Low-group mean
        high: High-group mean
        sd: Within-group sd
        seed: Random seed for reproducibility

    Returns:
        Array of shape (n_low + n_high,), rounded to 4 decimals
    """
    rng = np.random.default_rng(seed)
    values = np.concatenate([
        low + sd * rng.standard_normal(n_low),
        high + sd * rng.standard_normal(n_high),
    ])
    rng.shuffle(values)
    return np.round(values, 4)


def generate_point_pairs(
    count: int = 100,
    dimension: int = 1,
    scale: float = 1.5,
    seed: Optional[int] = 42
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generate random point pairs for kernel derivative oracles.

    Args:
        count: Number of pairs
        dimension: Point dimension
        scale: Sd of the Gaussian the points are drawn from
        seed: Random seed for reproducibility

    Returns:
        (X, Y), each of shape (count, dimension)
    """
    rng = np.random.default_rng(seed)
    X = scale * rng.standard_normal((count, dimension))
    Y = scale * rng.standard_normal((count, dimension))
    return X, Y


def write_series_csv(path, values: np.ndarray, header: Optional[str] = "value",
                     line_ending: str = "\n") -> None:
    """
    Write a single-series CSV in the format load_series_csv reads.

    Args:
        path: Target file
        values: Series
        header: Header row (None for no header)
        line_ending: "\\n" or "\\r\\n"
    """
    lines = [] if header is None else [header]
    lines.extend(repr(float(v)) for v in np.asarray(values, dtype=float).ravel())
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(line_ending.join(lines) + line_ending)
