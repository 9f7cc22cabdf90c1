"""
Experiments Module

Reproducible robustness experiments for KSD-Bayes and MS-KSD-Bayes:
- data: contamination models and series loaders (bundled Galaxy, gene surrogate)
- analysis: mode detection and the bimodality index
- settings: typed experiment settings
- runners: galaxy, gene expression, Gaussian location, blindness and rate check
- report: report container and the on-disk layout
"""

from .data import (
    DATA_DIR,
    GALAXY_CSV,
    GENE_SURROGATE_CSV,
    ContaminationSpec,
    replaced_count,
    generate_location_data,
    contaminate_dataset,
    load_series_csv,
    load_galaxy,
)
from .analysis import ModeReport, detect_modes, bimodality_index
from .settings import (
    MethodSettings,
    GalaxySettings,
    GeneSettings,
    LocationSettings,
    BlindnessSettings,
)
from .report import ExperimentReport, write_report
from .runners import (
    STANDARD_BAYES,
    KSD_BAYES,
    MSKSD_BAYES,
    DEFAULT_RATE_SIZES,
    cell_seed,
    run_galaxy,
    run_gene_expression,
    run_gaussian_location,
    blindness_demo,
    run_blindness,
    run_rate_check,
)

__all__ = [
    "DATA_DIR",
    "GALAXY_CSV",
    "GENE_SURROGATE_CSV",
    "ContaminationSpec",
    "replaced_count",
    "generate_location_data",
    "contaminate_dataset",
    "load_series_csv",
    "load_galaxy",
    "ModeReport",
    "detect_modes",
    "bimodality_index",
    "MethodSettings",
    "GalaxySettings",
    "GeneSettings",
    "LocationSettings",
    "BlindnessSettings",
    "ExperimentReport",
    "write_report",
    "STANDARD_BAYES",
    "KSD_BAYES",
    "MSKSD_BAYES",
    "DEFAULT_RATE_SIZES",
    "cell_seed",
    "run_galaxy",
    "run_gene_expression",
    "run_gaussian_location",
    "blindness_demo",
    "run_blindness",
    "run_rate_check",
]
