"""
Posterior Module

Generalized (MS-)KSD-Bayes posteriors:
- conjugate: closed-form Gaussian posterior for natural exponential families
- log_posterior: generic log-posterior (fast and direct paths), θ-grid evaluation
- sampler: random-walk Metropolis and a parallel multi-chain runner
- predictive: posterior-predictive density curves
"""

from .conjugate import (
    GaussianPrior,
    ConjugateCoefficients,
    ConjugatePosterior,
    conjugate_coefficients,
    conjugate_posterior,
    stable_cholesky,
)
from .log_posterior import (
    GeneralizedLogPosterior,
    PosteriorGrid,
    generalized_log_posterior,
    make_log_posterior,
    log_posterior_grid,
)
from .sampler import (
    ChainConfig,
    ChainResult,
    MultiChainResult,
    rwm_sample,
    run_chains,
    chain_seeds,
    batch_means_mcse,
    default_proposal_scale,
)
from .predictive import DensityCurve, predictive_density

__all__ = [
    "GaussianPrior",
    "ConjugateCoefficients",
    "ConjugatePosterior",
    "conjugate_coefficients",
    "conjugate_posterior",
    "stable_cholesky",
    "GeneralizedLogPosterior",
    "PosteriorGrid",
    "generalized_log_posterior",
    "make_log_posterior",
    "log_posterior_grid",
    "ChainConfig",
    "ChainResult",
    "MultiChainResult",
    "rwm_sample",
    "run_chains",
    "chain_seeds",
    "batch_means_mcse",
    "default_proposal_scale",
    "DensityCurve",
    "predictive_density",
]
