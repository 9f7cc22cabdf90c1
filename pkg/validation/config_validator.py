"""
Run Configuration Validator

Loads, merges and validates run configurations before any computation
starts. Configuration is layered:

    built-in defaults (config/msksd.yaml) < --config file (YAML or JSON) < CLI flags

The merged dictionary is what gets echoed to config.json, so rerunning with
--config <out>/config.json reproduces a run.
"""

import copy
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .errors import InputError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "msksd.yaml"
OUTPUT_ROOT_ENV_VAR = "MSKSD_OUTPUT_ROOT"
FALLBACK_OUTPUT_ROOT = "results"

KNOWN_SECTIONS = {
    "seed", "output_root", "method", "model", "mcmc",
    "galaxy", "gene", "location", "blindness", "rate",
}
KERNEL_KINDS = ("imq", "rbf")
WEIGHT_KINDS = ("identity", "none", "logrecip", "trunc")
MODEL_KINDS = ("gaussian", "kef", "mixture")
PLUGIN_KINDS = ("kde", "model_tracking")
PREDICTIVE_KINDS = ("mean", "averaged")
# Blocks replaced wholesale when an upper layer names a new "kind"
ATOMIC_BLOCKS = {"kernel", "weight"}


class ConfigValidationError(InputError):
    """Raised when configuration validation fails."""
    pass


def load_yaml_config(path: str) -> Dict[str, Any]:
    """
    Load YAML configuration file.

    Args:
        path: Path to YAML file

    Returns:
        Parsed config dictionary (empty for an empty file)

    Raises:
        ConfigValidationError: If file cannot be loaded
    """
    config_file = Path(path)

    if not config_file.exists():
        raise ConfigValidationError(f"Config file not found: {path}")

    try:
        with open(config_file, 'r', encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigValidationError(f"Invalid YAML in {path}: {e}")
    except OSError as e:
        raise ConfigValidationError(f"Error loading {path}: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigValidationError(f"Config {path} must contain a mapping, got {type(data).__name__}")
    return data


def load_json_config(path: str) -> Dict[str, Any]:
    """
    Load JSON configuration file.

    Args:
        path: Path to JSON file

    Returns:
        Parsed config dictionary

    Raises:
        ConfigValidationError: If file cannot be loaded
    """
    config_file = Path(path)

    if not config_file.exists():
        raise ConfigValidationError(f"Config file not found: {path}")

    try:
        with open(config_file, 'r', encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"Invalid JSON in {path}: {e}")
    except OSError as e:
        raise ConfigValidationError(f"Error loading {path}: {e}")

    if not isinstance(data, dict):
        raise ConfigValidationError(f"Config {path} must contain an object, got {type(data).__name__}")
    return data


def load_config_file(path: str) -> Dict[str, Any]:
    """Load a config file, choosing the parser by extension (.json, else YAML)."""
    if str(path).lower().endswith(".json"):
        return load_json_config(path)
    return load_yaml_config(path)


def default_config() -> Dict[str, Any]:
    """Built-in defaults shipped in config/msksd.yaml ({} if the file is missing)."""
    if not DEFAULT_CONFIG_PATH.exists():
        logger.warning(f"Default config {DEFAULT_CONFIG_PATH} not found, using dataclass defaults")
        return {}
    return load_yaml_config(str(DEFAULT_CONFIG_PATH))


def merge_configs(*layers: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Deep-merge config layers, later layers winning.

    Nested mappings merge key by key; any other value (lists included)
    replaces the earlier one. A kernel or weight block that states its
    "kind" replaces the earlier block entirely. None layers are skipped.
    """
    merged: Dict[str, Any] = {}
    for layer in layers:
        if not layer:
            continue
        for key, value in layer.items():
            atomic = key in ATOMIC_BLOCKS and isinstance(value, dict) and "kind" in value
            if isinstance(value, dict) and isinstance(merged.get(key), dict) and not atomic:
                merged[key] = merge_configs(merged[key], value)
            else:
                merged[key] = copy.deepcopy(value)
    return merged


def _require_number(section: str, key: str, value: Any, positive: bool = False,
                    non_negative: bool = False) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(
            f"'{section}.{key}' must be a number, got {type(value).__name__}"
        )
    if positive and not value > 0:
        raise ConfigValidationError(f"'{section}.{key}' must be positive, got {value}")
    if non_negative and value < 0:
        raise ConfigValidationError(f"'{section}.{key}' must be non-negative, got {value}")


def _require_fractions(section: str, key: str, values: Any) -> None:
    if not isinstance(values, list) or not values:
        raise ConfigValidationError(f"'{section}.{key}' must be a non-empty list")
    for v in values:
        _require_number(section, key, v)
        if not 0.0 <= v <= 1.0:
            raise ConfigValidationError(f"'{section}.{key}' entries must lie in [0, 1], got {v}")


def validate_kernel_config(section: str, cfg: Dict[str, Any]) -> None:
    """
    Validate a kernel block ({kind: imq, c, beta} or {kind: rbf, lengthscale}).

    Raises:
        ConfigValidationError: If config is invalid
    """
    kind = str(cfg.get("kind", "imq")).lower()
    if kind not in KERNEL_KINDS:
        raise ConfigValidationError(
            f"Invalid kernel kind '{kind}' in '{section}'. Must be one of: {', '.join(KERNEL_KINDS)}"
        )
    if kind == "imq":
        if "c" in cfg:
            _require_number(section, "c", cfg["c"], positive=True)
        if "beta" in cfg:
            _require_number(section, "beta", cfg["beta"])
            if not 0.0 < cfg["beta"] < 1.0:
                raise ConfigValidationError(f"'{section}.beta' must lie in (0, 1), got {cfg['beta']}")
    else:
        for key in ("lengthscale", "ell"):
            if key in cfg:
                _require_number(section, key, cfg[key], positive=True)


def validate_weight_config(section: str, cfg: Dict[str, Any]) -> None:
    """
    Validate a mode-sensitivity weight block.

    Raises:
        ConfigValidationError: If config is invalid
    """
    kind = str(cfg.get("kind", "identity")).lower()
    if kind not in WEIGHT_KINDS:
        raise ConfigValidationError(
            f"Invalid weight kind '{kind}' in '{section}'. Must be one of: {', '.join(WEIGHT_KINDS)}"
        )
    for key in ("gamma", "epsilon", "eps", "tau"):
        if key in cfg:
            _require_number(section, key, cfg[key], positive=True)


def validate_method_config(cfg: Dict[str, Any]) -> None:
    """
    Validate the shared method section.

    Warns when α·γ ≠ 1 for a non-identity weight.

    Raises:
        ConfigValidationError: If config is invalid
    """
    if "kernel" in cfg:
        validate_kernel_config("method.kernel", cfg["kernel"])
    weight = cfg.get("weight", {})
    validate_weight_config("method.weight", weight)
    alpha = cfg.get("alpha", 1.0)
    _require_number("method", "alpha", alpha, non_negative=True)

    plugin = cfg.get("plugin", "kde")
    if plugin not in PLUGIN_KINDS:
        raise ConfigValidationError(
            f"Invalid plug-in '{plugin}'. Must be one of: {', '.join(PLUGIN_KINDS)}"
        )
    predictive = cfg.get("predictive", "mean")
    if predictive not in PREDICTIVE_KINDS:
        raise ConfigValidationError(
            f"Invalid predictive '{predictive}'. Must be one of: {', '.join(PREDICTIVE_KINDS)}"
        )
    for key in ("grid_points", "predictive_draws", "n_jobs"):
        if key in cfg:
            value = cfg[key]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigValidationError(f"'method.{key}' must be an integer, got {value!r}")
    if cfg.get("grid_points", 512) < 3:
        raise ConfigValidationError(f"'method.grid_points' must be at least 3, got {cfg['grid_points']}")
    if "prominence_threshold" in cfg:
        _require_number("method", "prominence_threshold", cfg["prominence_threshold"])
        if not 0.0 < cfg["prominence_threshold"] < 1.0:
            raise ConfigValidationError(
                f"'method.prominence_threshold' must lie in (0, 1), got {cfg['prominence_threshold']}"
            )

    kind = str(weight.get("kind", "identity")).lower()
    if kind not in ("identity", "none"):
        gamma = weight.get("gamma", 1.0)
        product = alpha * gamma
        if abs(product - 1.0) > 1e-12:
            logger.warning(
                f"alpha * gamma = {product:.6g} (alpha={alpha}, gamma={gamma}). "
                "Experiments are calibrated for alpha * gamma = 1."
            )


def validate_model_config(cfg: Dict[str, Any]) -> None:
    """
    Validate the model section used by the ksd and fit commands.

    Raises:
        ConfigValidationError: If config is invalid
    """
    kind = cfg.get("kind", "gaussian")
    if kind not in MODEL_KINDS:
        raise ConfigValidationError(
            f"Invalid model kind '{kind}'. Must be one of: {', '.join(MODEL_KINDS)}"
        )
    kef = cfg.get("kef", {})
    if "p" in kef and (isinstance(kef["p"], bool) or not isinstance(kef["p"], int) or kef["p"] < 1):
        raise ConfigValidationError(f"'model.kef.p' must be a positive integer, got {kef['p']!r}")
    for key in ("S", "L", "beta_prior"):
        if key in kef:
            _require_number("model.kef", key, kef[key], positive=True)
    mixture = cfg.get("mixture", {})
    if "w1" in mixture:
        _require_number("model.mixture", "w1", mixture["w1"])
        if not 0.0 < mixture["w1"] < 1.0:
            raise ConfigValidationError(f"'model.mixture.w1' must lie in (0, 1), got {mixture['w1']}")
    if "sigma" in mixture:
        _require_number("model.mixture", "sigma", mixture["sigma"], positive=True)
    if "prior_variance" in cfg:
        _require_number("model", "prior_variance", cfg["prior_variance"], positive=True)
    theta = cfg.get("theta")
    if theta is not None:
        if not isinstance(theta, list):
            raise ConfigValidationError(f"'model.theta' must be a list, got {type(theta).__name__}")
        for v in theta:
            _require_number("model", "theta", v)


def validate_mcmc_config(cfg: Dict[str, Any]) -> None:
    """
    Validate the random-walk Metropolis section.

    Raises:
        ConfigValidationError: If config is invalid
    """
    steps = cfg.get("steps", 20000)
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
        raise ConfigValidationError(f"'mcmc.steps' must be a positive integer, got {steps!r}")
    burn_in = cfg.get("burn_in")
    if burn_in is not None:
        if isinstance(burn_in, bool) or not isinstance(burn_in, int) or not 0 <= burn_in < steps:
            raise ConfigValidationError(f"'mcmc.burn_in' must be an integer in [0, {steps}), got {burn_in!r}")
    chains = cfg.get("chains", 1)
    if isinstance(chains, bool) or not isinstance(chains, int) or chains < 1:
        raise ConfigValidationError(f"'mcmc.chains' must be a positive integer, got {chains!r}")
    scale = cfg.get("proposal_scale")
    if scale is not None and not isinstance(scale, list):
        _require_number("mcmc", "proposal_scale", scale, positive=True)


def validate_experiment_config(cfg: Dict[str, Any]) -> None:
    """
    Validate the experiment sections (galaxy, gene, location, blindness, rate).

    Raises:
        ConfigValidationError: If config is invalid
    """
    galaxy = cfg.get("galaxy", {})
    if "epsilons" in galaxy:
        _require_fractions("galaxy", "epsilons", galaxy["epsilons"])
    for key in ("noise_sd", "unit_scale"):
        if key in galaxy:
            _require_number("galaxy", key, galaxy[key], positive=True)
    if "kernel" in galaxy:
        validate_kernel_config("galaxy.kernel", galaxy["kernel"])

    gene = cfg.get("gene", {})
    if "kernel" in gene:
        validate_kernel_config("gene.kernel", gene["kernel"])

    location = cfg.get("location", {})
    if "epsilons" in location:
        _require_fractions("location", "epsilons", location["epsilons"])
    if "n" in location and (not isinstance(location["n"], int) or location["n"] < 2):
        raise ConfigValidationError(f"'location.n' must be an integer >= 2, got {location['n']!r}")
    for key in ("noise_sd", "prior_variance"):
        if key in location:
            _require_number("location", key, location[key], positive=True)

    blindness = cfg.get("blindness", {})
    for key in ("w1_true", "w1"):
        if key in blindness:
            _require_number("blindness", key, blindness[key])
            if not 0.0 < blindness[key] < 1.0:
                raise ConfigValidationError(f"'blindness.{key}' must lie in (0, 1), got {blindness[key]}")
    if "grid_step" in blindness:
        _require_number("blindness", "grid_step", blindness["grid_step"], positive=True)
        if not blindness["grid_step"] < 0.5:
            raise ConfigValidationError(f"'blindness.grid_step' must be below 0.5, got {blindness['grid_step']}")

    sizes = cfg.get("rate", {}).get("sizes")
    if sizes is not None:
        if not isinstance(sizes, list) or len(sizes) < 2 or any(
                isinstance(n, bool) or not isinstance(n, int) or n < 2 for n in sizes):
            raise ConfigValidationError(f"'rate.sizes' must list at least two integers >= 2, got {sizes!r}")


def validate_run_config(cfg: Dict[str, Any]) -> None:
    """
    Validate a merged run configuration.

    Unknown top-level keys are reported with a warning and otherwise ignored.

    Args:
        cfg: Merged configuration dictionary

    Raises:
        ConfigValidationError: If config is invalid
    """
    unknown = sorted(set(cfg) - KNOWN_SECTIONS)
    if unknown:
        logger.warning(f"Ignoring unrecognised config keys: {', '.join(unknown)}")

    seed = cfg.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigValidationError(f"'seed' must be a non-negative integer, got {seed!r}")

    validate_method_config(cfg.get("method", {}))
    validate_model_config(cfg.get("model", {}))
    validate_mcmc_config(cfg.get("mcmc", {}))
    validate_experiment_config(cfg)
    logger.debug("[OK] Run config validated")


def resolve_output_root(cfg: Dict[str, Any]) -> Path:
    """Output root: config value, else $MSKSD_OUTPUT_ROOT, else results/."""
    root = cfg.get("output_root") or os.environ.get(OUTPUT_ROOT_ENV_VAR) or FALLBACK_OUTPUT_ROOT
    return Path(root)


@dataclass
class RunConfig:
    """
    Effective configuration of one CLI invocation.

    Attributes:
        command: Subcommand name (e.g. "experiment galaxy")
        values: Merged and validated configuration (echoed to config.json)
        sources: Files that contributed layers, in merge order
    """
    command: str
    values: Dict[str, Any] = field(default_factory=dict)
    sources: List[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], command: str = "") -> "RunConfig":
        """Validate a complete configuration dictionary."""
        validate_run_config(data)
        return cls(command=command, values=copy.deepcopy(data))

    @classmethod
    def build(cls, command: str, config_path: Optional[str] = None,
              overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """
        Merge defaults < config file < flag overrides and validate.

        Args:
            command: Subcommand name
            config_path: Optional --config file (YAML or JSON)
            overrides: Nested dictionary built from CLI flags

        Returns:
            RunConfig

        Raises:
            ConfigValidationError: If a file cannot be loaded or the result is invalid
        """
        sources = [str(DEFAULT_CONFIG_PATH)] if DEFAULT_CONFIG_PATH.exists() else []
        file_layer = None
        if config_path:
            file_layer = load_config_file(config_path)
            sources.append(str(config_path))
        merged = merge_configs(default_config(), file_layer, overrides)
        validate_run_config(merged)
        return cls(command=command, values=merged, sources=sources)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.values.get(name) or {})

    @property
    def seed(self) -> Optional[int]:
        return self.values.get("seed")

    def with_seed(self, seed: int) -> "RunConfig":
        values = copy.deepcopy(self.values)
        values["seed"] = int(seed)
        return RunConfig(command=self.command, values=values, sources=list(self.sources))

    @property
    def output_root(self) -> Path:
        return resolve_output_root(self.values)

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.values)


if __name__ == "__main__":
    """
    Standalone config validation script.

    Usage:
        python -m validation.config_validator [config.yaml]
    """
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s'
    )

    try:
        run = RunConfig.build("validate", sys.argv[1] if len(sys.argv) > 1 else None)
        logger.info("=" * 60)
        logger.info("[OK] CONFIGURATION VALID")
        logger.info("=" * 60)
        logger.info(f"Sources: {', '.join(run.sources) or '(none)'}")
        logger.info(f"Output root: {run.output_root}")
    except ConfigValidationError as e:
        logger.error(f"Configuration validation failed: {e}")
        sys.exit(2)
