"""
Mode-Sensitivity Weights

ω_γ(x) multiplies the Stein operator and up-weights low-density regions so
that secondary modes are not drowned out by the dominant one.

Variants:
- identity:  ω = 1                                  (plain KSD)
- logrecip:  ω = γ / (|log p(x)| + ε)               bounded by γ/ε
- trunc:     ω = γ / (max(|log p(x)|, τ) + ε)       bounded by γ/(τ+ε)

Rescaling γ by c rescales the weighted Stein kernel by exactly c². Additive
shifts of log p do NOT cancel; the log-density convention is fixed per run.
"""

from dataclasses import dataclass, replace
from typing import Any, Dict, Literal

import numpy as np

from validation.errors import InputError

WeightKind = Literal["identity", "logrecip", "trunc"]

DEFAULT_GAMMA = 1.0
DEFAULT_EPSILON = 0.1
DEFAULT_TAU = 2.0


@dataclass(frozen=True)
class WeightSpec:
    """
    Mode-sensitivity weight specification.

    Attributes:
        kind: "identity", "logrecip" or "trunc"
        gamma: Global weight scale γ (> 0)
        epsilon: Denominator floor ε (> 0)
        tau: Truncation level τ (> 0, trunc only)
    """
    kind: WeightKind = "identity"
    gamma: float = DEFAULT_GAMMA
    epsilon: float = DEFAULT_EPSILON
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        """Validate weight parameters."""
        if self.kind not in ("identity", "logrecip", "trunc"):
            raise InputError(f"Unknown weight kind '{self.kind}' (expected identity, logrecip or trunc)")
        if not self.gamma > 0:
            raise InputError(f"Weight gamma must be positive, got {self.gamma}")
        if not self.epsilon > 0:
            raise InputError(f"Weight epsilon must be positive, got {self.epsilon}")
        if not self.tau > 0:
            raise InputError(f"Weight tau must be positive, got {self.tau}")

    @classmethod
    def identity(cls) -> "WeightSpec":
        """Unit weight (plain KSD)."""
        return cls(kind="identity")

    @classmethod
    def log_reciprocal(cls, gamma: float = DEFAULT_GAMMA, epsilon: float = DEFAULT_EPSILON) -> "WeightSpec":
        """Reciprocal-log-density weight γ / (|log p| + ε)."""
        return cls(kind="logrecip", gamma=float(gamma), epsilon=float(epsilon))

    @classmethod
    def truncated(cls, gamma: float = DEFAULT_GAMMA, epsilon: float = DEFAULT_EPSILON,
                  tau: float = DEFAULT_TAU) -> "WeightSpec":
        """Truncated weight γ / (max(|log p|, τ) + ε)."""
        return cls(kind="trunc", gamma=float(gamma), epsilon=float(epsilon), tau=float(tau))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WeightSpec":
        """
        Create WeightSpec from a config dictionary.

        Accepts "eps" as an alias for "epsilon" so CLI flag strings and YAML
        share one parser.
        """
        kind = str(data.get("kind", "identity")).lower()
        if kind in ("none", "unweighted"):
            kind = "identity"
        return cls(
            kind=kind,
            gamma=float(data.get("gamma", DEFAULT_GAMMA)),
            epsilon=float(data.get("epsilon", data.get("eps", DEFAULT_EPSILON))),
            tau=float(data.get("tau", DEFAULT_TAU)),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (only the fields the variant uses)."""
        if self.kind == "identity":
            return {"kind": "identity"}
        data = {"kind": self.kind, "gamma": self.gamma, "epsilon": self.epsilon}
        if self.kind == "trunc":
            data["tau"] = self.tau
        return data

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    @property
    def upper_bound(self) -> float:
        """Supremum M of ω over all log-densities."""
        if self.kind == "identity":
            return 1.0
        if self.kind == "logrecip":
            return self.gamma / self.epsilon
        return self.gamma / (self.tau + self.epsilon)

    def scaled(self, factor: float) -> "WeightSpec":
        """Copy with γ multiplied by factor."""
        if not factor > 0:
            raise InputError(f"Weight scale factor must be positive, got {factor}")
        return replace(self, gamma=self.gamma * factor)


def weight_value(spec: WeightSpec, log_density: float) -> float:
    """
    Evaluate ω_γ for one log-density value.

    Args:
        spec: Weight specification
        log_density: log p(x) (finite)

    Returns:
        Strictly positive, finite weight

    Raises:
        InputError: If log_density is not finite
    """
    if not np.isfinite(log_density):
        raise InputError(f"Weight needs a finite log-density, got {log_density}")
    if spec.kind == "identity":
        return 1.0
    magnitude = abs(float(log_density))
    if spec.kind == "trunc":
        magnitude = max(magnitude, spec.tau)
    return spec.gamma / (magnitude + spec.epsilon)


def weight_values(spec: WeightSpec, log_densities) -> np.ndarray:
    """
    Vectorised ω_γ over an array of log-densities.

    Args:
        spec: Weight specification
        log_densities: Array of shape (n,)

    Returns:
        Array of shape (n,) with the same values weight_value would give

    Raises:
        InputError: If any log-density is not finite (names the first index)
    """
    log_densities = np.asarray(log_densities, dtype=float)
    bad = np.flatnonzero(~np.isfinite(log_densities))
    if bad.size:
        i = int(bad[0])
        raise InputError(f"Weight needs finite log-densities; sample {i} has log p = {log_densities[i]}")
    if spec.kind == "identity":
        return np.ones_like(log_densities)
    magnitude = np.abs(log_densities)
    if spec.kind == "trunc":
        magnitude = np.maximum(magnitude, spec.tau)
    return spec.gamma / (magnitude + spec.epsilon)
