"""
Plug-in Densities for the Mode-Sensitivity Weight

The weight ω_γ needs a log-density at every sample. Feeding it p_θ itself
would make ω depend on θ and break the closed-form conjugate posterior, so the
default is a θ-independent plug-in:

- kde:            Gaussian kernel density estimate of the observed data
- model_at:       a model evaluated at a fixed parameter θ̂
- reference:      an arbitrary fixed log-density (e.g. the KEF reference q)
- model_tracking: the model at the current θ (non-conjugate, MCMC/grid only)

Log-densities are unnormalised where the source is unnormalised; the
convention is fixed per experiment.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy.special import logsumexp

from validation.errors import InputError, UnsupportedModelError
from .score_models import ScoreModel, as_points, as_theta

logger = logging.getLogger(__name__)

ZERO_VARIANCE_BANDWIDTH = 1e-3


def silverman_bandwidth(X: np.ndarray) -> float:
    """
    Silverman's rule of thumb, 1.06 * sd * n^(-1/5).

    For d > 1 the sd is averaged over coordinates.

    Args:
        X: Samples, shape (n, d)

    Returns:
        Bandwidth (0.0 if the sample has zero variance)
    """
    n = X.shape[0]
    sd = float(np.mean(np.std(X, axis=0, ddof=1)))
    return 1.06 * sd * n ** (-0.2)


@dataclass(frozen=True)
class PluginDensity:
    """
    Log-density source for the mode-sensitivity weight.

    Attributes:
        kind: "kde", "model_at", "reference" or "model_tracking"
        samples: KDE centres, shape (n, d) (kde only)
        bandwidth: KDE bandwidth (kde only)
        model: Score model (model_at / model_tracking)
        theta: Fixed parameter (model_at only)
        log_density_fn: Callable (n, d) -> (n,) (reference only)
        label: Human-readable description for reports
    """
    kind: str
    samples: Optional[np.ndarray] = None
    bandwidth: Optional[float] = None
    model: Optional[ScoreModel] = None
    theta: Optional[np.ndarray] = None
    log_density_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    label: str = ""

    @property
    def theta_dependent(self) -> bool:
        """Whether the log-density changes with the model parameter."""
        return self.kind == "model_tracking"

    def logpdf(self, X, theta=None) -> np.ndarray:
        """
        Log-density at every sample.

        Args:
            X: Samples, shape (n, d) or (n,)
            theta: Current model parameter (model_tracking only)

        Returns:
            Array of shape (n,)
        """
        if self.kind == "kde":
            X = as_points(X, self.samples.shape[1])
            d = X.shape[1]
            h = self.bandwidth
            diff = X[:, None, :] - self.samples[None, :, :]
            sq = np.einsum("ijd,ijd->ij", diff, diff)
            log_norm = np.log(self.samples.shape[0]) + d * (np.log(h) + 0.5 * np.log(2.0 * np.pi))
            return logsumexp(-0.5 * sq / h ** 2, axis=1) - log_norm
        if self.kind == "model_at":
            return self.model.unnorm_logpdf(X, self.theta)
        if self.kind == "reference":
            return np.asarray(self.log_density_fn(as_points(X)), dtype=float)
        if self.kind == "model_tracking":
            if theta is None and self.model.param_dim > 0:
                raise InputError("θ-tracking plug-in density needs the current θ")
            return self.model.unnorm_logpdf(X, theta)
        raise InputError(f"Unknown plug-in density kind '{self.kind}'")

    def describe(self) -> Dict[str, Any]:
        """Short JSON-friendly description."""
        info: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "kde":
            info["bandwidth"] = self.bandwidth
            info["n"] = int(self.samples.shape[0])
        if self.kind == "model_at":
            info["theta"] = np.asarray(self.theta).tolist()
        if self.label:
            info["label"] = self.label
        return info


def kde_plugin(samples, bandwidth: Optional[float] = None) -> PluginDensity:
    """
    Gaussian KDE plug-in over the observed data.

    Args:
        samples: Data, shape (n, d) or (n,), n >= 2
        bandwidth: Override bandwidth; defaults to Silverman's rule

    Returns:
        PluginDensity of kind "kde"

    Raises:
        InputError: If n < 2 or the bandwidth override is not positive
    """
    X = as_points(samples)
    if X.shape[0] < 2:
        raise InputError(f"KDE plug-in needs at least 2 samples, got {X.shape[0]}")
    if bandwidth is not None:
        if not bandwidth > 0:
            raise InputError(f"KDE bandwidth must be positive, got {bandwidth}")
        h = float(bandwidth)
    else:
        h = silverman_bandwidth(X)
        if not h > 0:
            logger.warning(
                f"Zero-variance sample for KDE plug-in; falling back to bandwidth {ZERO_VARIANCE_BANDWIDTH}"
            )
            h = ZERO_VARIANCE_BANDWIDTH
    return PluginDensity(kind="kde", samples=X.copy(), bandwidth=h, label=f"kde(h={h:.4g})")


def model_plugin(model: ScoreModel, theta) -> PluginDensity:
    """
    Plug-in that evaluates a model at a fixed parameter θ̂.

    Args:
        model: Score model
        theta: Fixed parameter vector

    Returns:
        PluginDensity of kind "model_at"
    """
    theta = as_theta(theta, model.param_dim)
    return PluginDensity(kind="model_at", model=model, theta=theta, label=f"{model.name}@theta")


def reference_plugin(log_density_fn: Callable[[np.ndarray], np.ndarray] = None,
                     model: ScoreModel = None) -> PluginDensity:
    """
    Plug-in from a fixed reference log-density.

    Either pass a callable directly, or an exponential-family model whose
    carrier b(x) is used (for the KEF this is the reference measure q).

    Raises:
        UnsupportedModelError: If a model without decomposition is given
    """
    if log_density_fn is None:
        if model is None or model.decomposition is None:
            raise UnsupportedModelError("Reference plug-in needs a callable or an exponential-family model")
        log_density_fn = model.decomposition.base_logpdf
    return PluginDensity(kind="reference", log_density_fn=log_density_fn, label="reference")


def tracking_plugin(model: ScoreModel) -> PluginDensity:
    """
    θ-tracking plug-in: ω follows p_θ. Not usable with the conjugate path.
    """
    return PluginDensity(kind="model_tracking", model=model, label=f"{model.name}@current-theta")
