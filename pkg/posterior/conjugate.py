"""
Closed-Form Conjugate Posterior for Natural Exponential Families

With an affine score s_θ(x) = ∇b(x) + ∇t(x)^T θ and a θ-independent weight,
the weighted V-statistic is an exact quadratic in θ:

    KSD_γ²(θ) = θ^T Γ_n θ + τ_n^T θ + c_n

Writing W_ij = ω_i ω_j / n², J_i = ∇t(x_i) (p × d), g_i = ∇b(x_i):

    Γ_n = Σ_ij W_ij k_ij J_i J_j^T                                   (symmetrised)
    τ_n = Σ_ij W_ij [J_i ∇_y k_ij + J_j ∇_x k_ij + k_ij (J_j g_i + J_i g_j)]
    c_n = Σ_ij W_ij [tr_ij + <g_i, ∇_y k_ij> + <g_j, ∇_x k_ij> + k_ij <g_i, g_j>]

A Gaussian prior N(μ0, Σ0) then gives the Gaussian posterior

    Σ_n^-1 = Σ0^-1 + 2 α n Γ_n
    μ_n    = Σ_n (Σ0^-1 μ0 - α n τ_n)

(the minus sign follows from completing the square with the τ_n above).
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from kernels import BaseKernelSpec
from models import PluginDensity, ScoreModel, as_points
from stein import SteinGram, WeightSpec, pointwise_weights, precompute_gram
from validation.errors import ConjugacyError, InputError, NumericalError, UnsupportedModelError

logger = logging.getLogger(__name__)

JITTER_LEVELS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
SYMMETRY_TOL = 1e-12


def stable_cholesky(A: np.ndarray, what: str = "matrix") -> Tuple[np.ndarray, bool]:
    """
    Lower Cholesky factor with bounded jitter escalation.

    Jitter is relative to the mean absolute diagonal and tried at
    1e-10, 1e-9, ..., 1e-6 before giving up.

    Args:
        A: Symmetric matrix
        what: Name used in log and error messages

    Returns:
        cho_factor pair (c, lower)

    Raises:
        NumericalError: If A is not positive definite even with jitter 1e-6
    """
    try:
        return cho_factor(A, lower=True)
    except LinAlgError:
        pass
    scale = max(float(np.mean(np.abs(np.diag(A)))), 1.0)
    eye = np.eye(A.shape[0])
    for jitter in JITTER_LEVELS:
        try:
            factor = cho_factor(A + jitter * scale * eye, lower=True)
            logger.warning(f"{what} needed jitter {jitter:g} (relative) for Cholesky factorisation")
            return factor
        except LinAlgError:
            continue
    raise NumericalError(
        f"{what} is not positive definite even with jitter {JITTER_LEVELS[-1]:g}; "
        f"increase the prior precision or reduce alpha"
    )


@dataclass(frozen=True, eq=False)
class GaussianPrior:
    """
    Gaussian prior N(mu0, Sigma0).

    Attributes:
        mu0: Prior mean, shape (p,)
        Sigma0: Prior covariance, shape (p, p), symmetric positive definite
    """
    mu0: np.ndarray
    Sigma0: np.ndarray

    def __post_init__(self):
        """Validate and normalise prior moments."""
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float)).ravel()
        Sigma0 = np.atleast_2d(np.asarray(self.Sigma0, dtype=float))
        p = mu0.shape[0]
        if Sigma0.shape != (p, p):
            raise InputError(f"Prior covariance must be {p}x{p}, got {Sigma0.shape}")
        if not np.allclose(Sigma0, Sigma0.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise InputError("Prior covariance must be symmetric (to 1e-12)")
        try:
            factor = cho_factor(Sigma0, lower=True)
        except LinAlgError:
            raise InputError("Prior covariance is not positive definite")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "Sigma0", Sigma0)
        object.__setattr__(self, "_factor", factor)

    @classmethod
    def isotropic(cls, p: int, variance: float = 1.0, mean: float = 0.0) -> "GaussianPrior":
        """N(mean·1, variance·I_p)."""
        return cls(mu0=np.full(p, float(mean)), Sigma0=float(variance) * np.eye(p))

    @classmethod
    def from_model(cls, model: ScoreModel) -> "GaussianPrior":
        """Prior exposed by a model (e.g. the KEF decay prior)."""
        if not hasattr(model, "prior_covariance"):
            raise UnsupportedModelError(f"Model '{model.name}' does not define a prior")
        return cls(mu0=model.prior_mean, Sigma0=model.prior_covariance)

    @property
    def dimension(self) -> int:
        return self.mu0.shape[0]

    @property
    def precision(self) -> np.ndarray:
        """Σ0^-1."""
        return cho_solve(self._factor, np.eye(self.dimension))

    def logpdf(self, theta) -> float:
        """Log prior density (normalised)."""
        diff = np.atleast_1d(np.asarray(theta, dtype=float)) - self.mu0
        c, _ = self._factor
        log_det = 2.0 * np.sum(np.log(np.diag(c)))
        maha = float(diff @ cho_solve(self._factor, diff))
        return -0.5 * (maha + log_det + self.dimension * np.log(2.0 * np.pi))

    def to_dict(self) -> Dict[str, Any]:
        return {"mu0": self.mu0.tolist(), "Sigma0": self.Sigma0.tolist()}


@dataclass(frozen=True, eq=False)
class ConjugateCoefficients:
    """
    Quadratic-loss coefficients of the weighted KSD² in θ.

    Attributes:
        Gamma_n: Quadratic coefficient, shape (p, p), symmetric
        tau_n: Linear coefficient, shape (p,)
        const_n: θ-free remainder
        n: Number of samples the coefficients were built from
    """
    Gamma_n: np.ndarray
    tau_n: np.ndarray
    const_n: float
    n: int

    @property
    def dimension(self) -> int:
        return self.tau_n.shape[0]

    def quadratic(self, theta) -> float:
        """θ^T Γ_n θ + τ_n^T θ + c_n, equal to the direct KSD² at θ."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return float(theta @ self.Gamma_n @ theta + self.tau_n @ theta + self.const_n)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.Gamma_n)[0])


def conjugate_coefficients(samples, model: ScoreModel, base: Optional[BaseKernelSpec] = None,
                           weight: Optional[WeightSpec] = None,
                           plugin: Optional[PluginDensity] = None,
                           gram: Optional[SteinGram] = None) -> ConjugateCoefficients:
    """
    Collect Γ_n, τ_n and c_n for an exponential-family model.

    Args:
        samples: Points, shape (n, d) or (n,); may be None when gram is given
        model: Model exposing the exponential-family decomposition
        base: Base kernel (defaults to the gram's kernel, else IMQ(1, 0.5))
        weight: Weight specification (defaults to identity)
        plugin: θ-independent plug-in density for the weight
        gram: Optional cached pair tensors

    Returns:
        ConjugateCoefficients

    Raises:
        UnsupportedModelError: If the model has no exponential-family decomposition
        ConjugacyError: If the weight's plug-in density depends on θ
    """
    if model.decomposition is None:
        raise UnsupportedModelError(
            f"Model '{model.name}' has no exponential-family decomposition; use the MCMC path"
        )
    weight = weight or WeightSpec.identity()
    if not weight.is_identity and plugin is not None and plugin.theta_dependent:
        raise ConjugacyError(
            "Weight tracks p_θ, so the loss is not quadratic in θ; use a θ-independent plug-in or MCMC"
        )
    if gram is None:
        gram = precompute_gram(as_points(samples, model.dimension), base or BaseKernelSpec.imq())
    elif base is not None and base != gram.base:
        raise InputError(f"Kernel {base.to_dict()} does not match cached Gram kernel {gram.base.to_dict()}")

    X = gram.samples
    n = gram.n
    dec = model.decomposition
    J = np.asarray(dec.suff_stat_jacobian(X), dtype=float)
    g = np.asarray(dec.base_grad(X), dtype=float)
    w = pointwise_weights(X, weight, plugin)
    W = np.outer(w, w) / n ** 2
    M = W * gram.K

    Gamma = np.zeros((model.param_dim, model.param_dim))
    for k in range(X.shape[1]):
        Jk = J[:, :, k]
        Gamma += Jk.T @ M @ Jk
    Gamma = 0.5 * (Gamma + Gamma.T)

    tau = (
        np.einsum("ij,ipd,ijd->p", W, J, gram.grad_y, optimize=True)
        + np.einsum("ij,jpd,ijd->p", W, J, gram.grad_x, optimize=True)
        + np.einsum("ij,id,jpd->p", M, g, J, optimize=True)
        + np.einsum("ij,ipd,jd->p", M, J, g, optimize=True)
    )
    const = float(np.sum(
        W * (gram.cross_trace
             + np.einsum("id,ijd->ij", g, gram.grad_y)
             + np.einsum("jd,ijd->ij", g, gram.grad_x)
             + (g @ g.T) * gram.K)
    ))

    coeffs = ConjugateCoefficients(Gamma_n=Gamma, tau_n=tau, const_n=const, n=n)
    min_eig = coeffs.min_eigenvalue()
    if min_eig < -1e-10:
        logger.warning(f"Γ_n has a negative eigenvalue {min_eig:.3e}; check the weight and kernel")
    logger.debug(f"Conjugate coefficients: n={n}, p={model.param_dim}, min eig(Γ_n)={min_eig:.3e}")
    return coeffs


@dataclass(frozen=True, eq=False)
class ConjugatePosterior:
    """
    Gaussian generalized posterior N(mu_n, Sigma_n).

    Attributes:
        mu_n: Posterior mean, shape (p,)
        Sigma_n: Posterior covariance, shape (p, p)
        precision_n: Σ_n^-1 = Σ0^-1 + 2 α n Γ_n
    """
    mu_n: np.ndarray
    Sigma_n: np.ndarray
    precision_n: np.ndarray

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.Sigma_n))

    def logpdf(self, theta) -> float:
        """Normalised Gaussian log-density."""
        diff = np.atleast_1d(np.asarray(theta, dtype=float)) - self.mu_n
        factor = stable_cholesky(self.precision_n, "posterior precision")
        log_det_prec = 2.0 * np.sum(np.log(np.diag(factor[0])))
        p = self.mu_n.shape[0]
        return float(-0.5 * (diff @ self.precision_n @ diff) + 0.5 * log_det_prec
                     - 0.5 * p * np.log(2.0 * np.pi))

    def to_dict(self) -> Dict[str, Any]:
        return {"mu_n": self.mu_n.tolist(), "Sigma_n": self.Sigma_n.tolist(), "sd": self.sd.tolist()}


def conjugate_posterior(prior: GaussianPrior, coeffs: ConjugateCoefficients, alpha: float,
                        n: Optional[int] = None) -> ConjugatePosterior:
    """
    Exact Gaussian generalized posterior.

    Args:
        prior: Gaussian prior
        coeffs: Quadratic-loss coefficients
        alpha: Loss scale α (≥ 0)
        n: Sample count in the α n scaling (defaults to coeffs.n)

    Returns:
        ConjugatePosterior

    Raises:
        InputError: On negative alpha or dimension mismatch
        NumericalError: If the posterior precision is not positive definite
    """
    if not alpha >= 0:
        raise InputError(f"alpha must be non-negative, got {alpha}")
    if prior.dimension != coeffs.dimension:
        raise InputError(f"Prior has p={prior.dimension}, coefficients have p={coeffs.dimension}")
    n = coeffs.n if n is None else int(n)
    if n < 1:
        raise InputError(f"n must be positive, got {n}")

    scale = alpha * n
    prior_precision = prior.precision
    precision = prior_precision + 2.0 * scale * coeffs.Gamma_n
    precision = 0.5 * (precision + precision.T)
    factor = stable_cholesky(precision, "posterior precision")
    Sigma_n = cho_solve(factor, np.eye(prior.dimension))
    Sigma_n = 0.5 * (Sigma_n + Sigma_n.T)
    mu_n = cho_solve(factor, prior_precision @ prior.mu0 - scale * coeffs.tau_n)
    return ConjugatePosterior(mu_n=mu_n, Sigma_n=Sigma_n, precision_n=precision)
