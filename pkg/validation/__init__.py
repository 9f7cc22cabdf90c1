"""
Validation Layer

Error hierarchy, configuration validation, numerical invariant checks and
seeded synthetic data generators shared by the library, CLI and tests.

Components:
- errors: exception hierarchy and CLI exit-code mapping
- config_validator: run-configuration loading, merging and validation
- invariants: reusable numerical invariant checks (symmetry, PSD, normalisation)
- synthetic_data: deterministic synthetic datasets (mixtures, surrogates)
"""

from .errors import (
    MSKSDError,
    InputError,
    UnsupportedModelError,
    ConjugacyError,
    DataParseError,
    NumericalError,
    ConvergenceError,
    exit_code_for,
)
from .config_validator import (
    ConfigValidationError,
    RunConfig,
    load_yaml_config,
    load_json_config,
    load_config_file,
    merge_configs,
    validate_run_config,
    resolve_output_root,
)
from .invariants import (
    check_symmetric,
    check_positive_semidefinite,
    check_density_normalised,
    check_mode_report,
    check_posterior_precision,
    check_discrepancy_value,
)
from .synthetic_data import (
    generate_mixture_series,
    generate_expression_surrogate,
    generate_point_pairs,
    write_series_csv,
)

__all__ = [
    # Errors
    "MSKSDError",
    "InputError",
    "UnsupportedModelError",
    "ConjugacyError",
    "DataParseError",
    "NumericalError",
    "ConvergenceError",
    "exit_code_for",
    # Config
    "ConfigValidationError",
    "RunConfig",
    "load_yaml_config",
    "load_json_config",
    "load_config_file",
    "merge_configs",
    "validate_run_config",
    "resolve_output_root",
    # Invariants
    "check_symmetric",
    "check_positive_semidefinite",
    "check_density_normalised",
    "check_mode_report",
    "check_posterior_precision",
    "check_discrepancy_value",
    # Synthetic data
    "generate_mixture_series",
    "generate_expression_surrogate",
    "generate_point_pairs",
    "write_series_csv",
]
