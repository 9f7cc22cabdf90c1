"""
Empirical (MS-)KSD Estimators

Full V-statistic over all n² pairs (diagonal included):

    KSD_γ²  = (1/n²) Σ_i Σ_j ω(x_i) ω(x_j) k_p(x_i, x_j)

With identity weights this is the plain KSD². Every θ-independent pair
quantity (kernel values, gradients, cross traces) can be cached once in a
SteinGram and reused across parameter values.

Pair sums are reduced block-by-block over rows in a fixed order, so a result
is bit-reproducible for fixed inputs and the cached and direct paths agree to
rounding.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from kernels import BaseKernelSpec, pairwise_derivatives
from models import PluginDensity, ScoreModel, as_points
from validation.errors import InputError, NumericalError
from .stein_kernel import stein_kernel_block
from .weights import WeightSpec, weight_values

logger = logging.getLogger(__name__)

ROW_BLOCK = 256


@dataclass(frozen=True, eq=False)
class SteinGram:
    """
    θ-independent pair tensors for one sample set.

    Memory contract: each tensor holds exactly n² pair entries (times d for
    the gradients).

    Attributes:
        samples: Points, shape (n, d)
        base: Base kernel used to build the tensors
        K: Kernel values, shape (n, n)
        grad_x: ∇_x k, shape (n, n, d)
        grad_y: ∇_y k, shape (n, n, d)
        cross_trace: tr(∇_x ∇_y^T k), shape (n, n)
    """
    samples: np.ndarray
    base: BaseKernelSpec
    K: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    cross_trace: np.ndarray

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    @property
    def pair_entries(self) -> int:
        return self.K.size

    def subset(self, idx) -> "SteinGram":
        """Restrict every tensor to the index subset idx (in the given order)."""
        idx = np.asarray(idx, dtype=int)
        grid = np.ix_(idx, idx)
        return SteinGram(
            samples=self.samples[idx],
            base=self.base,
            K=self.K[grid],
            grad_x=self.grad_x[grid],
            grad_y=self.grad_y[grid],
            cross_trace=self.cross_trace[grid],
        )


@dataclass(frozen=True)
class DiscrepancyValue:
    """
    Squared discrepancy estimate.

    Attributes:
        value: (MS-)KSD² estimate (≥ 0 up to rounding)
        estimator: "full" or "minibatch"
        batch_size: B for the mini-batch estimator, else None
    """
    value: float
    estimator: str = "full"
    batch_size: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"value": self.value, "estimator": self.estimator}
        if self.batch_size is not None:
            data["batch_size"] = self.batch_size
        return data


def precompute_gram(samples, base: BaseKernelSpec) -> SteinGram:
    """
    Cache all θ-independent pair quantities.

    Args:
        samples: Points, shape (n, d) or (n,), n >= 1
        base: Base kernel specification

    Returns:
        SteinGram

    Raises:
        InputError: If the sample set is empty
    """
    X = as_points(samples)
    if X.shape[0] < 1:
        raise InputError("Cannot build a Stein Gram from an empty sample set")
    K, GX, GY, TR = pairwise_derivatives(base, X)
    logger.debug(f"Stein Gram cached: n={X.shape[0]}, d={X.shape[1]}, kernel={base.kind}")
    return SteinGram(samples=X, base=base, K=K, grad_x=GX, grad_y=GY, cross_trace=TR)


def pointwise_weights(samples, weight: WeightSpec, weight_density: Optional[PluginDensity] = None,
                      theta=None) -> np.ndarray:
    """
    ω_γ at every sample.

    Args:
        samples: Points, shape (n, d) or (n,)
        weight: Weight specification
        weight_density: Plug-in density feeding log p (required unless identity)
        theta: Current parameter (only read by θ-tracking plug-ins)

    Returns:
        Array of shape (n,)

    Raises:
        InputError: If a non-identity weight has no density, or log p is not finite
    """
    X = as_points(samples)
    if weight.is_identity:
        return np.ones(X.shape[0])
    if weight_density is None:
        raise InputError(f"Weight '{weight.kind}' needs a plug-in density for log p")
    return weight_values(weight, weight_density.logpdf(X, theta))


def _checked_scores(model: ScoreModel, X: np.ndarray, theta) -> np.ndarray:
    S = np.asarray(model.score(X, theta), dtype=float)
    bad = np.flatnonzero(~np.all(np.isfinite(S), axis=1))
    if bad.size:
        i = int(bad[0])
        raise NumericalError(
            f"Non-finite score at sample {i} (x={X[i].tolist()}, score={S[i].tolist()}) "
            f"for model '{model.name}'"
        )
    return S


def _weighted_pair_sum(X: np.ndarray, S: np.ndarray, w: np.ndarray,
                       base: BaseKernelSpec, gram: Optional[SteinGram]) -> float:
    n = X.shape[0]
    total = 0.0
    for start in range(0, n, ROW_BLOCK):
        rows = slice(start, min(start + ROW_BLOCK, n))
        if gram is not None:
            K, GX, GY, TR = gram.K[rows], gram.grad_x[rows], gram.grad_y[rows], gram.cross_trace[rows]
        else:
            K, GX, GY, TR = pairwise_derivatives(base, X[rows], X)
        block = stein_kernel_block(K, GX, GY, TR, S[rows], S)
        total += float(np.sum(w[rows, None] * block * w[None, :]))
    return total / n ** 2


def ksd_squared(samples, model: ScoreModel, theta=None, base: Optional[BaseKernelSpec] = None,
                weight: Optional[WeightSpec] = None, weight_density: Optional[PluginDensity] = None,
                gram: Optional[SteinGram] = None) -> DiscrepancyValue:
    """
    Full V-statistic (MS-)KSD² of a sample set against a model.

    Args:
        samples: Points, shape (n, d) or (n,); may be None when gram is given
        model: Score model
        theta: Model parameter
        base: Base kernel (defaults to the gram's kernel, else IMQ(1, 0.5))
        weight: Weight specification (defaults to identity, i.e. plain KSD²)
        weight_density: Plug-in density for the weight
        gram: Optional cached pair tensors for these samples

    Returns:
        DiscrepancyValue with estimator "full"

    Raises:
        InputError: On an empty sample set or kernel/gram mismatch
        NumericalError: If the score is not finite at some sample
    """
    weight = weight or WeightSpec.identity()
    if gram is not None:
        if base is not None and base != gram.base:
            raise InputError(f"Kernel {base.to_dict()} does not match cached Gram kernel {gram.base.to_dict()}")
        base = gram.base
        X = gram.samples if samples is None else as_points(samples, gram.dimension)
        if X.shape[0] != gram.n:
            raise InputError(f"Sample count {X.shape[0]} does not match cached Gram (n={gram.n})")
    else:
        base = base or BaseKernelSpec.imq()
        X = as_points(samples, model.dimension)
    if X.shape[0] < 1:
        raise InputError("Cannot evaluate a discrepancy on an empty sample set")

    S = _checked_scores(model, X, theta)
    w = pointwise_weights(X, weight, weight_density, theta)
    return DiscrepancyValue(value=_weighted_pair_sum(X, S, w, base, gram), estimator="full")


def ksd_squared_minibatch(samples, model: ScoreModel, theta=None, base: Optional[BaseKernelSpec] = None,
                          weight: Optional[WeightSpec] = None,
                          weight_density: Optional[PluginDensity] = None,
                          batch_size: int = 1, seed: Optional[int] = None,
                          gram: Optional[SteinGram] = None) -> DiscrepancyValue:
    """
    V-statistic over a uniform subsample of size B drawn without replacement.

    B = n keeps the original order and reproduces ksd_squared exactly.

    Args:
        samples, model, theta, base, weight, weight_density, gram: As for ksd_squared
        batch_size: B, with 1 <= B <= n
        seed: Seed for the subsample

    Returns:
        DiscrepancyValue with estimator "minibatch"

    Raises:
        InputError: If B is out of range
    """
    X = gram.samples if (samples is None and gram is not None) else as_points(samples, model.dimension)
    n = X.shape[0]
    if int(batch_size) != batch_size or not 1 <= batch_size <= n:
        raise InputError(f"Mini-batch size must be an integer in [1, {n}], got {batch_size}")
    batch_size = int(batch_size)
    if batch_size == n:
        idx = np.arange(n)
    else:
        idx = np.random.default_rng(seed).choice(n, size=batch_size, replace=False)
    sub_gram = None
    if gram is not None:
        sub_gram = gram if batch_size == n else gram.subset(idx)
    full = ksd_squared(X[idx], model, theta, base=base, weight=weight,
                       weight_density=weight_density, gram=sub_gram)
    return DiscrepancyValue(value=full.value, estimator="minibatch", batch_size=batch_size)
