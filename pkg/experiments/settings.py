"""
Experiment Settings

Typed settings for the experiment runners. Every class converts from and to
plain dictionaries so the effective configuration can be echoed to
config.json and read back.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from kernels import BaseKernelSpec
from models import KEFSpec
from stein import WeightSpec


@dataclass(frozen=True)
class MethodSettings:
    """
    Settings shared by all runners.

    Attributes:
        base: Base kernel
        weight: Mode-sensitivity weight for the MS-KSD-Bayes method
        alpha: Loss scale α
        plugin: Plug-in density for the weight ("kde" or "model_tracking")
        grid_points: Predictive grid resolution
        prominence_threshold: Relative prominence for mode detection
        predictive: "mean" (posterior-mean curve) or "averaged" (over posterior draws)
        predictive_draws: Draw count for the averaged predictive
        n_jobs: joblib workers for grid cells
    """
    base: BaseKernelSpec = field(default_factory=BaseKernelSpec.imq)
    weight: WeightSpec = field(default_factory=WeightSpec.log_reciprocal)
    alpha: float = 1.0
    plugin: str = "kde"
    grid_points: int = 512
    prominence_threshold: float = 0.05
    predictive: str = "mean"
    predictive_draws: int = 200
    n_jobs: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MethodSettings":
        return cls(
            base=BaseKernelSpec.from_dict(data.get("kernel", {})),
            weight=WeightSpec.from_dict(data.get("weight", {"kind": "logrecip"})),
            alpha=float(data.get("alpha", 1.0)),
            plugin=str(data.get("plugin", "kde")),
            grid_points=int(data.get("grid_points", 512)),
            prominence_threshold=float(data.get("prominence_threshold", 0.05)),
            predictive=str(data.get("predictive", "mean")),
            predictive_draws=int(data.get("predictive_draws", 200)),
            n_jobs=int(data.get("n_jobs", 1)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kernel": self.base.to_dict(),
            "weight": self.weight.to_dict(),
            "alpha": self.alpha,
            "plugin": self.plugin,
            "grid_points": self.grid_points,
            "prominence_threshold": self.prominence_threshold,
            "predictive": self.predictive,
            "predictive_draws": self.predictive_draws,
            "n_jobs": self.n_jobs,
        }


@dataclass(frozen=True)
class GalaxySettings:
    """
    Galaxy velocity experiment.

    Attributes:
        epsilons: Contamination fractions
        y: Contaminant location (in scaled units)
        noise_sd: Contaminant sd
        unit_scale: Velocities are divided by this before modelling
        center: Center data at the clean-sample mean before fitting
        margin: Predictive grid margin beyond the data range
        kef: KEF specification
        kernel: Base kernel for this experiment (RBF, ℓ = 1)
    """
    epsilons: List[float] = field(default_factory=lambda: [0.0, 0.1, 0.2])
    y: float = 5.0
    noise_sd: float = 0.1
    unit_scale: float = 1e4
    center: bool = True
    margin: float = 1.0
    kef: KEFSpec = field(default_factory=lambda: KEFSpec(p=25, S=3.0, L=10.0, beta_prior=1.1))
    kernel: BaseKernelSpec = field(default_factory=lambda: BaseKernelSpec.rbf(1.0))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GalaxySettings":
        default = cls()
        return cls(
            epsilons=[float(e) for e in data.get("epsilons", default.epsilons)],
            y=float(data.get("y", default.y)),
            noise_sd=float(data.get("noise_sd", default.noise_sd)),
            unit_scale=float(data.get("unit_scale", default.unit_scale)),
            center=bool(data.get("center", default.center)),
            margin=float(data.get("margin", default.margin)),
            kef=KEFSpec.from_dict(data["kef"]) if "kef" in data else default.kef,
            kernel=BaseKernelSpec.from_dict(data["kernel"]) if "kernel" in data else default.kernel,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilons": list(self.epsilons),
            "y": self.y,
            "noise_sd": self.noise_sd,
            "unit_scale": self.unit_scale,
            "center": self.center,
            "margin": self.margin,
            "kef": self.kef.to_dict(),
            "kernel": self.kernel.to_dict(),
        }


@dataclass(frozen=True)
class GeneSettings:
    """
    Gene expression experiment.

    Attributes:
        csv_path: Series CSV (None = bundled surrogate)
        log_transform: Apply log2(1 + x) on load
        standardize: Center and scale to unit sd before fitting
        margin: Predictive grid margin in standardized units
        kef: KEF specification
        kernel: Base kernel for this experiment
    """
    csv_path: Optional[str] = None
    log_transform: bool = False
    standardize: bool = True
    margin: float = 1.0
    kef: KEFSpec = field(default_factory=lambda: KEFSpec(p=10, S=4.0, L=9.0, beta_prior=1.2))
    kernel: BaseKernelSpec = field(default_factory=lambda: BaseKernelSpec.rbf(1.0))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneSettings":
        default = cls()
        return cls(
            csv_path=data.get("csv_path"),
            log_transform=bool(data.get("log_transform", default.log_transform)),
            standardize=bool(data.get("standardize", default.standardize)),
            margin=float(data.get("margin", default.margin)),
            kef=KEFSpec.from_dict(data["kef"]) if "kef" in data else default.kef,
            kernel=BaseKernelSpec.from_dict(data["kernel"]) if "kernel" in data else default.kernel,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "csv_path": self.csv_path,
            "log_transform": self.log_transform,
            "standardize": self.standardize,
            "margin": self.margin,
            "kef": self.kef.to_dict(),
            "kernel": self.kernel.to_dict(),
        }


@dataclass(frozen=True)
class LocationSettings:
    """
    Gaussian location contamination experiment.

    Attributes:
        n: Sample size
        theta_star: True location
        epsilons: Contamination probabilities
        ys: Contaminant locations
        noise_sd: Contaminant sd
        prior_variance: N(0, prior_variance) prior on θ
    """
    n: int = 100
    theta_star: float = 1.0
    epsilons: List[float] = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2])
    ys: List[float] = field(default_factory=lambda: [3.0, 5.0, 10.0, 20.0])
    noise_sd: float = 1.0
    prior_variance: float = 1.0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LocationSettings":
        default = cls()
        return cls(
            n=int(data.get("n", default.n)),
            theta_star=float(data.get("theta_star", default.theta_star)),
            epsilons=[float(e) for e in data.get("epsilons", default.epsilons)],
            ys=[float(y) for y in data.get("ys", default.ys)],
            noise_sd=float(data.get("noise_sd", default.noise_sd)),
            prior_variance=float(data.get("prior_variance", default.prior_variance)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "theta_star": self.theta_star,
            "epsilons": list(self.epsilons),
            "ys": list(self.ys),
            "noise_sd": self.noise_sd,
            "prior_variance": self.prior_variance,
        }


@dataclass(frozen=True)
class BlindnessSettings:
    """
    Mixture-weight blindness demonstration.

    Attributes:
        w1_true: True weight of the +mu component
        mu: Component location
        sigma: Component sd
        n: Sample size
        grid_step: Spacing of the w1 grid on (0, 1)
    """
    w1_true: float = 0.7
    mu: float = 4.0
    sigma: float = 1.0
    n: int = 1000
    grid_step: float = 0.02

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BlindnessSettings":
        default = cls()
        return cls(
            w1_true=float(data.get("w1_true", data.get("w1", default.w1_true))),
            mu=float(data.get("mu", default.mu)),
            sigma=float(data.get("sigma", default.sigma)),
            n=int(data.get("n", default.n)),
            grid_step=float(data.get("grid_step", default.grid_step)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"w1_true": self.w1_true, "mu": self.mu, "sigma": self.sigma,
                "n": self.n, "grid_step": self.grid_step}

    def w1_grid(self) -> np.ndarray:
        """Open-interval grid step, 2·step, ..., 1 - step."""
        count = int(round(1.0 / self.grid_step)) - 1
        return self.grid_step * np.arange(1, count + 1)
