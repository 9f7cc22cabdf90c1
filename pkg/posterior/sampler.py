"""
Random-Walk Metropolis Sampler

Gaussian random-walk Metropolis for generalized posteriors that have no closed
form (non-exponential-family models, θ-tracking weights), plus a parallel
multi-chain runner. One chain is strictly sequential; chains never share
mutable state.

Usage:
    from posterior import ChainConfig, rwm_sample

    config = ChainConfig(steps=20000, proposal_scale=0.5, seed=7)
    result = rwm_sample(log_target, config, initial=[0.0])
    print(result.mean, result.acceptance_rate)
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from validation.errors import InputError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN_FRACTION = 0.2


def default_proposal_scale(p: int, posterior_sd: Union[float, Sequence[float]] = 1.0) -> np.ndarray:
    """2.4/√p times a preliminary posterior sd (per coordinate)."""
    return 2.4 / np.sqrt(p) * np.broadcast_to(np.asarray(posterior_sd, dtype=float), (p,)).copy()


@dataclass(frozen=True)
class ChainConfig:
    """
    Random-walk Metropolis configuration.

    Attributes:
        steps: Total iterations
        burn_in: Discarded leading iterations (None = 20% of steps)
        proposal_scale: Proposal sd, scalar or per coordinate (None = 2.4/√p)
        seed: RNG seed
        thin: Keep every thin-th post-burn-in draw
    """
    steps: int = 20000
    burn_in: Optional[int] = None
    proposal_scale: Optional[Union[float, List[float]]] = None
    seed: Optional[int] = None
    thin: int = 1

    def __post_init__(self):
        """Validate chain configuration."""
        if self.steps < 1:
            raise InputError(f"Chain steps must be positive, got {self.steps}")
        if not 0 <= self.resolved_burn_in < self.steps:
            raise InputError(f"burn_in must satisfy 0 <= burn_in < steps, got {self.burn_in} with steps={self.steps}")
        if self.thin < 1:
            raise InputError(f"thin must be >= 1, got {self.thin}")
        if self.proposal_scale is not None and np.any(np.asarray(self.proposal_scale, dtype=float) <= 0):
            raise InputError(f"proposal_scale must be positive, got {self.proposal_scale}")

    @property
    def resolved_burn_in(self) -> int:
        if self.burn_in is None:
            return int(DEFAULT_BURN_IN_FRACTION * self.steps)
        return int(self.burn_in)

    @property
    def kept(self) -> int:
        return len(range(self.resolved_burn_in, self.steps, self.thin))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChainConfig":
        """Create ChainConfig from a config dictionary."""
        scale = data.get("proposal_scale")
        return cls(
            steps=int(data.get("steps", 20000)),
            burn_in=None if data.get("burn_in") is None else int(data["burn_in"]),
            proposal_scale=scale if scale is None or np.ndim(scale) else float(scale),
            seed=None if data.get("seed") is None else int(data["seed"]),
            thin=int(data.get("thin", 1)),
        )

    def to_dict(self) -> Dict[str, Any]:
        scale = self.proposal_scale
        if scale is not None and np.ndim(scale):
            scale = [float(s) for s in scale]
        return {"steps": self.steps, "burn_in": self.resolved_burn_in, "proposal_scale": scale,
                "seed": self.seed, "thin": self.thin}


def batch_means_mcse(draws: np.ndarray) -> np.ndarray:
    """
    Monte-Carlo standard error of the mean by non-overlapping batch means.

    Args:
        draws: Array of shape (m, p)

    Returns:
        Array of shape (p,)
    """
    m = draws.shape[0]
    n_batches = max(int(np.sqrt(m)), 2)
    size = m // n_batches
    if size < 1:
        return np.full(draws.shape[1], np.nan)
    means = draws[: n_batches * size].reshape(n_batches, size, -1).mean(axis=1)
    return means.std(axis=0, ddof=1) / np.sqrt(n_batches)


@dataclass(frozen=True, eq=False)
class ChainResult:
    """
    Output of one random-walk Metropolis chain.

    Attributes:
        samples: Kept draws, shape (kept, p)
        log_target: Log-target at the kept draws, shape (kept,)
        accepted: Accept flag of every iteration, shape (steps,)
        seed: Seed the chain ran with
        proposal_scale: Resolved per-coordinate proposal sd
    """
    samples: np.ndarray
    log_target: np.ndarray
    accepted: np.ndarray
    seed: Optional[int]
    proposal_scale: np.ndarray

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted))

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def covariance(self) -> np.ndarray:
        return np.atleast_2d(np.cov(self.samples, rowvar=False))

    @property
    def mcse(self) -> np.ndarray:
        return batch_means_mcse(self.samples)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "mcse": self.mcse.tolist(),
            "acceptance_rate": self.acceptance_rate,
            "kept": int(self.samples.shape[0]),
            "seed": self.seed,
        }


def rwm_sample(log_target: Callable[[np.ndarray], float], config: ChainConfig,
               initial) -> ChainResult:
    """
    Run one Gaussian random-walk Metropolis chain.

    Args:
        log_target: θ -> log density (up to a constant); -inf rejects
        config: Chain configuration
        initial: Starting state θ0, shape (p,)

    Returns:
        ChainResult (deterministic for a fixed seed)

    Raises:
        InputError: If the starting state has zero target density
        NumericalError: If the log-target returns NaN (names the offending θ)
    """
    theta = np.atleast_1d(np.asarray(initial, dtype=float)).copy()
    p = theta.shape[0]
    if config.proposal_scale is None:
        scale = default_proposal_scale(p)
    else:
        scale = np.broadcast_to(np.asarray(config.proposal_scale, dtype=float), (p,)).copy()

    rng = np.random.default_rng(config.seed)
    increments = rng.standard_normal((config.steps, p)) * scale
    log_u = np.log(rng.random(config.steps))

    current = float(log_target(theta))
    if np.isnan(current):
        raise NumericalError(f"Log-target returned NaN at initial θ={theta.tolist()}")
    if not np.isfinite(current):
        raise InputError(f"Initial θ={theta.tolist()} has zero target density")

    burn_in = config.resolved_burn_in
    keep_idx = range(burn_in, config.steps, config.thin)
    samples = np.empty((len(keep_idx), p))
    kept_log = np.empty(len(keep_idx))
    accepted = np.zeros(config.steps, dtype=bool)
    slot = 0
    for step in range(config.steps):
        proposal = theta + increments[step]
        proposed = float(log_target(proposal))
        if np.isnan(proposed):
            raise NumericalError(f"Log-target returned NaN at θ={proposal.tolist()} (step {step})")
        if log_u[step] < proposed - current:
            theta = proposal
            current = proposed
            accepted[step] = True
        if step >= burn_in and (step - burn_in) % config.thin == 0:
            samples[slot] = theta
            kept_log[slot] = current
            slot += 1

    result = ChainResult(samples=samples, log_target=kept_log, accepted=accepted,
                         seed=config.seed, proposal_scale=scale)
    logger.debug(f"RWM chain done: steps={config.steps}, acceptance={result.acceptance_rate:.3f}")
    return result


@dataclass(frozen=True, eq=False)
class MultiChainResult:
    """
    Pooled output of several independent chains.

    Attributes:
        chains: Per-chain results in seed order
    """
    chains: List[ChainResult] = field(default_factory=list)

    @property
    def pooled(self) -> np.ndarray:
        return np.vstack([c.samples for c in self.chains])

    @property
    def mean(self) -> np.ndarray:
        return self.pooled.mean(axis=0)

    @property
    def covariance(self) -> np.ndarray:
        return np.atleast_2d(np.cov(self.pooled, rowvar=False))

    @property
    def mcse(self) -> np.ndarray:
        """Pooled MCSE from per-chain batch means (chains independent)."""
        per_chain = np.array([c.mcse for c in self.chains])
        return np.sqrt(np.sum(per_chain ** 2, axis=0)) / len(self.chains)

    @property
    def acceptance_rates(self) -> List[float]:
        return [c.acceptance_rate for c in self.chains]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "mcse": self.mcse.tolist(),
            "acceptance_rates": self.acceptance_rates,
            "chains": len(self.chains),
            "seeds": [c.seed for c in self.chains],
        }


def chain_seeds(master_seed: Optional[int], n_chains: int) -> List[int]:
    """Independent per-chain seeds spawned from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(n_chains)
    return [int(child.generate_state(1)[0]) for child in children]


def run_chains(log_target: Callable[[np.ndarray], float], config: ChainConfig, initial,
               n_chains: int = 4, n_jobs: int = 1) -> MultiChainResult:
    """
    Run independent chains with distinct seeds, optionally in parallel.

    Args:
        log_target: Picklable θ -> log density
        config: Shared chain configuration; its seed is the master seed
        initial: Common starting state
        n_chains: Number of chains
        n_jobs: joblib worker count (1 = sequential)

    Returns:
        MultiChainResult
    """
    if n_chains < 1:
        raise InputError(f"n_chains must be positive, got {n_chains}")
    seeds = chain_seeds(config.seed, n_chains)
    logger.info(f"Running {n_chains} RWM chains ({config.steps} steps each, n_jobs={n_jobs})")
    chains = Parallel(n_jobs=n_jobs)(
        delayed(rwm_sample)(log_target, replace(config, seed=s), initial) for s in seeds
    )
    result = MultiChainResult(chains=list(chains))
    logger.info(f"[OK] Chains done: acceptance {', '.join(f'{a:.2f}' for a in result.acceptance_rates)}")
    return result
