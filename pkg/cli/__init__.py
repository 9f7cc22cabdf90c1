"""
CLI Package

Subcommand entry point (ksd, experiment, fit, bi) over the library packages.
Run with `python msksd.py <command>` or `python -m cli <command>`.
"""

from .main import main, build_parser, configure_logging
from .flags import build_overrides, parse_kernel_flag, parse_weight_flag

__all__ = [
    "main",
    "build_parser",
    "configure_logging",
    "build_overrides",
    "parse_kernel_flag",
    "parse_weight_flag",
]
