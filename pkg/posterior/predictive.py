"""
Posterior-Predictive Density Curves

exp(unnorm_logpdf) on a grid, shifted by its maximum before exponentiating and
normalised by the trapezoid rule. With posterior draws every draw is
normalised separately and the curves are averaged.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from models import ScoreModel
from validation.errors import InputError, NumericalError


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """
    Density evaluated on a grid.

    Attributes:
        grid: Strictly ascending evaluation points, shape (m,)
        density: Non-negative values, shape (m,)
        label: Method or cell label
    """
    grid: np.ndarray
    density: np.ndarray
    label: str = ""

    def integral(self) -> float:
        return float(trapezoid(self.density, self.grid))

    def shifted(self, offset: float, scale: float = 1.0) -> "DensityCurve":
        """
        Map the grid through x -> scale * x + offset (density rescaled to stay normalised).
        """
        return DensityCurve(grid=self.grid * scale + offset, density=self.density / scale, label=self.label)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"grid": self.grid, "density": self.density})

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "points": int(self.grid.shape[0]), "integral": self.integral()}


def _normalised_curve(grid: np.ndarray, model: ScoreModel, theta) -> np.ndarray:
    log_values = np.asarray(model.unnorm_logpdf(grid, theta), dtype=float)
    top = np.max(log_values)
    if not np.isfinite(top):
        raise NumericalError(f"Predictive log-density has no finite value on the grid (θ={np.ravel(theta).tolist()})")
    values = np.exp(log_values - top)
    return values / trapezoid(values, grid)


def predictive_density(grid, model: ScoreModel, theta=None, draws: Optional[np.ndarray] = None,
                       label: str = "") -> DensityCurve:
    """
    Normalised predictive density on a grid.

    Args:
        grid: Strictly ascending points, at least 3
        model: Score model providing unnorm_logpdf
        theta: Point estimate (e.g. the posterior mean)
        draws: Posterior draws, shape (m, p); used instead of theta when given
        label: Curve label

    Returns:
        DensityCurve integrating to 1 on the grid

    Raises:
        InputError: If the grid is malformed or neither theta nor draws is given
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.shape[0] < 3 or np.any(np.diff(grid) <= 0):
        raise InputError("Predictive grid must be strictly ascending with at least 3 points")
    if draws is not None:
        draws = np.atleast_2d(np.asarray(draws, dtype=float))
        density = np.mean([_normalised_curve(grid, model, th) for th in draws], axis=0)
    elif theta is not None or model.param_dim == 0:
        density = _normalised_curve(grid, model, theta)
    else:
        raise InputError("Predictive density needs a point estimate θ or posterior draws")
    return DensityCurve(grid=grid, density=density, label=label)
