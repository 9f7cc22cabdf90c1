"""
Score Models

A ScoreModel provides the score s_p(x; θ) = ∇_x log p_θ(x) and the
unnormalised log-density. Natural exponential families additionally expose
the affine decomposition of the score,

    p_θ(x) ∝ exp(θ·t(x) + b(x)),    s_θ(x) = ∇b(x) + ∇t(x)^T θ,

which is what makes the MS-KSD loss quadratic in θ.

All evaluations are vectorised over samples: points are passed as an array of
shape (n, d) (a 1-d array is read as n scalar points) and θ as a p-vector.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy.special import expit, logit, logsumexp, softmax

from validation.errors import InputError
from .hermite import hermite_basis

logger = logging.getLogger(__name__)

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def as_points(X, dimension: Optional[int] = None) -> np.ndarray:
    """
    Coerce samples to shape (n, d).

    Args:
        X: Scalar, (n,) or (n, d) array-like
        dimension: Expected d (validated when given)

    Returns:
        Float array of shape (n, d)

    Raises:
        InputError: On wrong rank or dimension
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X[:, None] if dimension in (None, 1) else X[None, :]
    if X.ndim != 2:
        raise InputError(f"Samples must be (n,) or (n, d), got shape {X.shape}")
    if dimension is not None and X.shape[1] != dimension:
        raise InputError(f"Dimension mismatch: model has d={dimension}, samples have d={X.shape[1]}")
    return X


def as_theta(theta, param_dim: int) -> np.ndarray:
    """Coerce θ to a float vector of length param_dim."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    if theta.shape[0] != param_dim:
        raise InputError(f"θ must have length {param_dim}, got {theta.shape[0]}")
    return theta


@dataclass(frozen=True)
class ExponentialFamilyDecomposition:
    """
    Affine decomposition of a natural exponential family's score.

    Each callable takes samples of shape (n, d).

    Attributes:
        suff_stat: t(x), returns (n, p)
        suff_stat_jacobian: ∇t(x), returns (n, p, d)
        base_grad: ∇b(x), returns (n, d)
        base_logpdf: b(x), returns (n,)
    """
    suff_stat: Callable[[np.ndarray], np.ndarray]
    suff_stat_jacobian: Callable[[np.ndarray], np.ndarray]
    base_grad: Callable[[np.ndarray], np.ndarray]
    base_logpdf: Callable[[np.ndarray], np.ndarray]


class ScoreModel(ABC):
    """
    Abstract score model.

    Attributes:
        name: Short identifier used in logs and reports
        dimension: Data dimension d
        param_dim: Parameter dimension p
        decomposition: Exponential-family decomposition, or None
    """

    name: str = "model"
    dimension: int = 1
    param_dim: int = 0
    decomposition: Optional[ExponentialFamilyDecomposition] = None

    @abstractmethod
    def score(self, X, theta=None) -> np.ndarray:
        """Score ∇_x log p_θ(x) at every sample, shape (n, d)."""

    @abstractmethod
    def unnorm_logpdf(self, X, theta=None) -> np.ndarray:
        """Unnormalised log-density at every sample, shape (n,)."""

    @property
    def is_exponential_family(self) -> bool:
        """Whether the score is affine in θ."""
        return self.decomposition is not None

    def describe(self) -> Dict[str, Any]:
        """Short JSON-friendly description."""
        return {"name": self.name, "dimension": self.dimension, "param_dim": self.param_dim}


class ExponentialFamilyModel(ScoreModel):
    """
    Natural exponential family p_θ(x) ∝ exp(θ·t(x) + b(x)).

    Score and log-density are derived from the decomposition, so the
    affine-in-θ property holds exactly.
    """

    def __init__(self, name: str, dimension: int, param_dim: int,
                 decomposition: ExponentialFamilyDecomposition):
        self.name = name
        self.dimension = int(dimension)
        self.param_dim = int(param_dim)
        self.decomposition = decomposition

    def score(self, X, theta=None) -> np.ndarray:
        X = as_points(X, self.dimension)
        theta = as_theta(np.zeros(self.param_dim) if theta is None else theta, self.param_dim)
        jac = self.decomposition.suff_stat_jacobian(X)
        return self.decomposition.base_grad(X) + np.einsum("npd,p->nd", jac, theta)

    def unnorm_logpdf(self, X, theta=None) -> np.ndarray:
        X = as_points(X, self.dimension)
        theta = as_theta(np.zeros(self.param_dim) if theta is None else theta, self.param_dim)
        return self.decomposition.suff_stat(X) @ theta + self.decomposition.base_logpdf(X)


class GaussianLocationModel(ExponentialFamilyModel):
    """
    Unit-variance Gaussian location family N(θ, I_d).

    t(x) = x, b(x) = -||x||^2 / 2, score s(x; θ) = θ - x.
    """

    def __init__(self, dimension: int = 1):
        d = int(dimension)
        decomposition = ExponentialFamilyDecomposition(
            suff_stat=lambda X: X,
            suff_stat_jacobian=lambda X: np.broadcast_to(np.eye(d), (X.shape[0], d, d)),
            base_grad=lambda X: -X,
            base_logpdf=lambda X: -0.5 * np.einsum("nd,nd->n", X, X),
        )
        super().__init__("gaussian_location", d, d, decomposition)


@dataclass(frozen=True)
class KEFSpec:
    """
    Kernel exponential family specification (Hermite basis, Gaussian reference).

    Attributes:
        p: Number of basis functions
        S: Reference standard deviation, q = N(0, S^2)
        L: Prior global scale
        beta_prior: Prior decay exponent, θ_i ~ N(0, L^2 i^-beta_prior)
    """
    p: int = 25
    S: float = 3.0
    L: float = 10.0
    beta_prior: float = 1.1

    def __post_init__(self):
        """Validate KEF spec."""
        if int(self.p) != self.p or self.p < 1:
            raise InputError(f"KEF basis count p must be an integer >= 1, got {self.p}")
        if not self.S > 0:
            raise InputError(f"KEF reference sd S must be positive, got {self.S}")
        if not self.L > 0:
            raise InputError(f"KEF prior scale L must be positive, got {self.L}")
        if not self.beta_prior > 0:
            raise InputError(f"KEF prior decay beta_prior must be positive, got {self.beta_prior}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KEFSpec":
        """Create KEFSpec from a config dictionary."""
        return cls(
            p=int(data.get("p", 25)),
            S=float(data.get("S", 3.0)),
            L=float(data.get("L", 10.0)),
            beta_prior=float(data.get("beta_prior", 1.1)),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {"p": self.p, "S": self.S, "L": self.L, "beta_prior": self.beta_prior}

    def prior_variances(self) -> np.ndarray:
        """Diagonal of Σ0: L^2 i^-beta_prior for i = 1..p."""
        i = np.arange(1, self.p + 1, dtype=float)
        return self.L ** 2 * i ** (-self.beta_prior)


class KernelExponentialFamily(ExponentialFamilyModel):
    """
    Finite-rank kernel exponential family on the real line.

    p_θ(x) ∝ q(x) exp(Σ_j θ_j φ_j(x)) with q = N(0, S^2) and the scaled
    Hermite basis φ_j(x) = x^j / sqrt(j!) exp(-x^2 / 2), j = 0..p-1.
    The carrier b(x) = -x^2 / (2 S^2) drops the reference normaliser.
    """

    def __init__(self, spec: KEFSpec):
        self.spec = spec
        inv_s2 = 1.0 / spec.S ** 2
        p = spec.p
        decomposition = ExponentialFamilyDecomposition(
            suff_stat=lambda X: hermite_basis(p, X[:, 0])[0],
            suff_stat_jacobian=lambda X: hermite_basis(p, X[:, 0])[1][:, :, None],
            base_grad=lambda X: -X * inv_s2,
            base_logpdf=lambda X: -0.5 * X[:, 0] ** 2 * inv_s2,
        )
        super().__init__("kef", 1, p, decomposition)

    @property
    def prior_mean(self) -> np.ndarray:
        """Prior mean μ0 = 0."""
        return np.zeros(self.param_dim)

    @property
    def prior_covariance(self) -> np.ndarray:
        """Prior covariance Σ0 = diag(L^2 i^-β)."""
        return np.diag(self.spec.prior_variances())

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update(self.spec.to_dict())
        return info


class TwoComponentMixture(ScoreModel):
    """
    Symmetric two-component Gaussian mixture on the real line.

    p(x) = w1 N(x; mu, sigma^2) + (1 - w1) N(x; -mu, sigma^2)

    With parameterize_weight=False the model is fixed (θ is empty). With
    parameterize_weight=True, θ = (logit w1,), which keeps w1 on the open
    interval (0, 1) for any real θ.
    """

    def __init__(self, w1: float = 0.5, mu: float = 4.0, sigma: float = 1.0,
                 parameterize_weight: bool = False):
        if not 0.0 < w1 < 1.0:
            raise InputError(f"Mixture weight w1 must lie in the open interval (0, 1), got {w1}")
        if not sigma > 0:
            raise InputError(f"Mixture sigma must be positive, got {sigma}")
        self.name = "two_component_mixture"
        self.dimension = 1
        self.w1 = float(w1)
        self.mu = float(mu)
        self.sigma = float(sigma)
        self.parameterize_weight = parameterize_weight
        self.param_dim = 1 if parameterize_weight else 0
        self.decomposition = None

    def mixture_weight(self, theta=None) -> float:
        """Resolve w1 from θ (logit scale) or the fixed weight."""
        if not self.parameterize_weight:
            return self.w1
        theta = as_theta(theta, 1)
        return float(expit(theta[0]))

    def _component_logs(self, X: np.ndarray, w1: float) -> np.ndarray:
        """Per-component weighted log-densities, shape (n, 2)."""
        x = X[:, 0]
        s2 = self.sigma ** 2
        norm = -np.log(self.sigma) - LOG_SQRT_2PI
        # log1p keeps 1 - w1 accurate when w1 is within 1e-9 of 1
        log_w = np.array([np.log(w1), np.log1p(-w1)])
        means = np.array([self.mu, -self.mu])
        return log_w[None, :] + norm - 0.5 * (x[:, None] - means[None, :]) ** 2 / s2

    def score(self, X, theta=None) -> np.ndarray:
        X = as_points(X, 1)
        logs = self._component_logs(X, self.mixture_weight(theta))
        resp = softmax(logs, axis=1)
        means = np.array([self.mu, -self.mu])
        return ((resp * (means[None, :] - X)).sum(axis=1) / self.sigma ** 2)[:, None]

    def unnorm_logpdf(self, X, theta=None) -> np.ndarray:
        X = as_points(X, 1)
        return logsumexp(self._component_logs(X, self.mixture_weight(theta)), axis=1)

    def sample(self, n: int, rng: np.random.Generator, theta=None) -> np.ndarray:
        """Draw n points, shape (n, 1)."""
        w1 = self.mixture_weight(theta)
        first = rng.random(n) < w1
        centers = np.where(first, self.mu, -self.mu)
        return (centers + self.sigma * rng.standard_normal(n))[:, None]

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update({"w1": self.w1, "mu": self.mu, "sigma": self.sigma,
                     "parameterize_weight": self.parameterize_weight})
        return info


def gaussian_location_model(dimension: int = 1) -> GaussianLocationModel:
    """
    Unit-variance Gaussian location model, score θ - x.

    Args:
        dimension: Data (and parameter) dimension, 1 for the experiments

    Returns:
        GaussianLocationModel
    """
    return GaussianLocationModel(dimension)


def two_component_mixture(w1: float, mu: float, sigma: float,
                          parameterize_weight: bool = False) -> TwoComponentMixture:
    """
    Two-component symmetric Gaussian mixture model.

    Args:
        w1: Weight of the +mu component, in (0, 1)
        mu: Component location (components at +mu and -mu)
        sigma: Common component sd
        parameterize_weight: If True, θ = (logit w1,) drives the weight

    Returns:
        TwoComponentMixture

    Raises:
        InputError: If w1 is on the {0, 1} boundary or sigma <= 0
    """
    return TwoComponentMixture(w1=w1, mu=mu, sigma=sigma, parameterize_weight=parameterize_weight)


def kef_model(spec: KEFSpec) -> KernelExponentialFamily:
    """
    Kernel exponential family with a Hermite basis.

    Args:
        spec: KEFSpec (validated on construction)

    Returns:
        KernelExponentialFamily exposing prior_mean / prior_covariance
    """
    return KernelExponentialFamily(spec)


def weight_to_theta(w1: float) -> np.ndarray:
    """Map a mixture weight to the logit-scale θ of a parameterised mixture."""
    if not 0.0 < w1 < 1.0:
        raise InputError(f"Mixture weight must lie in (0, 1), got {w1}")
    return np.array([logit(w1)])
