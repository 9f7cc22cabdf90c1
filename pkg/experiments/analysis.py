"""
Curve Analysis

Mode detection on predictive density curves and the bimodality index used to
rank expression series.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture

from posterior import DensityCurve
from validation.errors import ConvergenceError, InputError

logger = logging.getLogger(__name__)

DEFAULT_PROMINENCE = 0.05
NORMALISATION_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class ModeReport:
    """
    Modes of a density curve.

    Attributes:
        mode_count: Number of modes
        locations: Mode locations, strictly ascending
        prominences: Prominence of each mode as a fraction of the global max
        masses: Integrated density of each mode's basin (sums to 1)
        threshold: Prominence threshold used
    """
    mode_count: int
    locations: np.ndarray
    prominences: np.ndarray
    masses: np.ndarray
    threshold: float = DEFAULT_PROMINENCE

    def has_mode_in(self, low: float, high: float) -> bool:
        return bool(np.any((self.locations >= low) & (self.locations <= high)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode_count": self.mode_count,
            "locations": self.locations.tolist(),
            "prominences": self.prominences.tolist(),
            "masses": self.masses.tolist(),
        }


def detect_modes(curve: DensityCurve, prominence_threshold: float = DEFAULT_PROMINENCE) -> ModeReport:
    """
    Find the modes of a normalised density curve.

    A local maximum is a mode iff its topographic prominence (height above
    the higher of its two bases) is at least prominence_threshold times the
    global maximum. Flat tops are located at the plateau midpoint. A curve
    with no interior peak reports its global maximum as the single mode.
    Basins are split at the lowest grid point between consecutive modes.

    Args:
        curve: Normalised density curve
        prominence_threshold: Relative prominence in (0, 1)

    Returns:
        ModeReport

    Raises:
        InputError: If the curve does not integrate to 1 or the threshold is out of range
    """
    if not 0.0 < prominence_threshold < 1.0:
        raise InputError(f"Prominence threshold must lie in (0, 1), got {prominence_threshold}")
    grid = np.asarray(curve.grid, dtype=float)
    f = np.asarray(curve.density, dtype=float)
    total = trapezoid(f, grid)
    if abs(total - 1.0) > NORMALISATION_TOL:
        raise InputError(f"Mode detection needs a normalised curve, integral is {total:.6f}")

    top = float(np.max(f))
    peaks, props = find_peaks(f, prominence=prominence_threshold * top, plateau_size=1)
    if peaks.size:
        locations = 0.5 * (grid[props["left_edges"]] + grid[props["right_edges"]])
        prominences = props["prominences"] / top
        peak_idx = peaks
    else:
        on_top = np.flatnonzero(f == top)
        run_end = on_top[0]
        while run_end + 1 < f.shape[0] and f[run_end + 1] == top:
            run_end += 1
        locations = np.array([0.5 * (grid[on_top[0]] + grid[run_end])])
        prominences = np.array([1.0])
        peak_idx = np.array([(on_top[0] + run_end) // 2])

    cuts = [0]
    for left, right in zip(peak_idx[:-1], peak_idx[1:]):
        cuts.append(int(left + np.argmin(f[left:right + 1])))
    cuts.append(f.shape[0] - 1)
    masses = np.array([trapezoid(f[a:b + 1], grid[a:b + 1]) for a, b in zip(cuts[:-1], cuts[1:])])
    masses = masses / masses.sum()

    return ModeReport(
        mode_count=int(locations.shape[0]),
        locations=locations,
        prominences=prominences,
        masses=masses,
        threshold=prominence_threshold,
    )


def bimodality_index(data, n_init: int = 10, tol: float = 1e-8, max_iter: int = 500,
                     seed: Optional[int] = 0) -> float:
    """
    Bimodality index of a series.

    Fits a two-component Gaussian mixture with a shared variance by EM and
    returns √(π(1 - π)) |μ1 - μ2| / σ.

    Args:
        data: Series, shape (n,), n >= 10
        n_init: EM restarts
        tol: Convergence tolerance on the per-sample log-likelihood bound
        max_iter: EM iteration cap
        seed: Seed for the EM initialisations

    Returns:
        BI >= 0 (exactly 0 for constant data)

    Raises:
        InputError: If n < 10 or the data is not finite
        ConvergenceError: If EM has not converged after max_iter iterations
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.shape[0] < 10:
        raise InputError(f"Bimodality index needs at least 10 values, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InputError("Bimodality index needs finite values")
    if np.ptp(x) == 0:
        return 0.0

    gmm = GaussianMixture(n_components=2, covariance_type="tied", n_init=n_init, tol=tol,
                          max_iter=max_iter, random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        gmm.fit(x[:, None])
    if not gmm.converged_:
        raise ConvergenceError(
            f"EM did not converge in {max_iter} iterations (n={x.shape[0]}, "
            f"lower bound {gmm.lower_bound_:.6g}, iterations {gmm.n_iter_})"
        )
    pi = float(gmm.weights_[0])
    mu1, mu2 = gmm.means_[:, 0]
    sigma = float(np.sqrt(gmm.covariances_[0, 0]))
    bi = float(np.sqrt(pi * (1.0 - pi)) * abs(mu1 - mu2) / sigma)
    logger.debug(f"Bimodality index {bi:.4f} (pi={pi:.3f}, mu=({mu1:.3f}, {mu2:.3f}), sigma={sigma:.3f})")
    return bi
