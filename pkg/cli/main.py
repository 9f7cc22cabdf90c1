"""
MS-KSD Command-Line Interface

Usage:
    # MS-KSD² of a series against N(θ, 1) at θ = 0, with the plain KSD² alongside
    python msksd.py ksd data.csv --theta 0 --compare

    # Mini-batch estimator with B = 200
    python msksd.py ksd data.csv --batch 200 --seed 3

    # Experiments (report directory under $MSKSD_OUTPUT_ROOT or results/)
    python msksd.py experiment galaxy --epsilon 0,0.1,0.2 --seed 7
    python msksd.py experiment location --n-jobs 4
    python msksd.py experiment blindness --w1 0.7 --mu 4
    python msksd.py experiment gene --csv my_gene.csv --log-transform
    python msksd.py experiment rate

    # Conjugate KEF posterior, checked against RWM chains
    python msksd.py fit data.csv --model kef --kef-p 5 --mcmc --steps 100000

    # Bimodality index of a series
    python msksd.py bi expression.csv

    # Rerun from an emitted configuration
    python msksd.py experiment galaxy --config results/galaxy_seed7/config.json

Machine-readable results go to stdout as JSON, logs go to stderr.

Exit codes:
    0  success
    2  input error (bad flags, config, data file or model)
    3  numerical error (non-finite scores, non-PD precision, EM failure)
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

import numpy as np

from validation.config_validator import RunConfig
from validation.errors import MSKSDError, exit_code_for
from .commands import COMMANDS
from .flags import build_overrides

logger = logging.getLogger("cli")

EXPERIMENTS = ("galaxy", "location", "gene", "blindness", "rate")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="YAML or JSON config file (overrides built-in defaults)")
    common.add_argument("--seed", type=int, help="Master seed (auto-generated and echoed if omitted)")
    common.add_argument("--out", type=str, help="Output directory (experiment reports)")
    common.add_argument("--kernel", type=str, help="Base kernel, e.g. imq:c=1,beta=0.5 or rbf:ell=1")
    common.add_argument("--weight", type=str,
                        help="Weight: identity | logrecip:gamma=1,eps=0.1 | trunc:gamma=1,eps=0.1,tau=2")
    common.add_argument("--alpha", type=float, help="Loss scale alpha")
    common.add_argument("--gamma", type=float, help="Weight scale gamma (alpha * gamma = 1 is recommended)")
    common.add_argument("--plugin", choices=["kde", "model_tracking"], help="Plug-in density for the weight")
    common.add_argument("--n-jobs", dest="n_jobs", type=int, help="joblib workers")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    common.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")
    return common


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("data", type=str, help="Single-series CSV (one value per row, optional header)")
    parser.add_argument("--model", choices=["gaussian", "kef", "mixture"], help="Score model")
    parser.add_argument("--kef-p", dest="kef_p", type=int, help="KEF basis size p")
    parser.add_argument("--w1", type=float, help="Mixture weight of the +mu component")
    parser.add_argument("--mu", type=float, help="Mixture component location")
    parser.add_argument("--sigma", type=float, help="Mixture component sd")
    parser.add_argument("--log-transform", dest="log_transform", action="store_true",
                        help="Apply log2(1 + x) to the series")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the ksd, experiment, fit and bi subcommands."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="msksd",
        description="Mode-sensitive kernel Stein discrepancy and generalized Bayesian posteriors",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ksd = sub.add_parser("ksd", parents=[common], help="(MS-)KSD^2 of a series against a model")
    _add_model_flags(ksd)
    ksd.add_argument("--theta", type=str, help="Model parameter, comma-separated (default: prior mean)")
    ksd.add_argument("--compare", action="store_true", help="Also report the unweighted KSD^2")
    ksd.add_argument("--batch", type=int, help="Mini-batch size B (default: full V-statistic)")

    experiment = sub.add_parser("experiment", parents=[common], help="Run an experiment and write a report")
    experiment.add_argument("name", choices=EXPERIMENTS, help="Experiment")
    experiment.add_argument("--epsilon", type=str, help="Contamination levels, comma-separated")
    experiment.add_argument("--y", type=str, help="Contaminant location(s), comma-separated")
    experiment.add_argument("--n", type=int, help="Sample size (location, blindness)")
    experiment.add_argument("--w1", type=float, help="True mixture weight (blindness)")
    experiment.add_argument("--mu", type=float, help="Component location (blindness)")
    experiment.add_argument("--sigma", type=float, help="Component sd (blindness)")
    experiment.add_argument("--csv", type=str, help="Expression series CSV (gene)")
    experiment.add_argument("--log-transform", dest="log_transform", action="store_true",
                            help="Apply log2(1 + x) to the gene series")
    experiment.add_argument("--sizes", type=str, help="Sample sizes for the rate check, comma-separated")
    experiment.add_argument("--predictive", choices=["mean", "averaged"], help="Predictive curve type")
    experiment.add_argument("--timing", action="store_true", help="Keep wall_time_ms in summary.csv")

    fit = sub.add_parser("fit", parents=[common], help="Generalized posterior of a model")
    _add_model_flags(fit)
    fit.add_argument("--mcmc", action="store_true", help="Also run random-walk Metropolis chains")
    fit.add_argument("--steps", type=int, help="RWM steps per chain")
    fit.add_argument("--chains", type=int, help="Number of RWM chains")

    bi = sub.add_parser("bi", parents=[common], help="Bimodality index of a series")
    bi.add_argument("data", type=str, help="Single-series CSV")
    bi.add_argument("--log-transform", dest="log_transform", action="store_true",
                    help="Apply log2(1 + x) to the series")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Route logs to stderr; stdout carries JSON results only."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1)[0])


def main(argv: Optional[List[str]] = None) -> int:
    """
    CLI entry point.

    Args:
        argv: Arguments (defaults to sys.argv[1:])

    Returns:
        Exit code (0 success, 2 input error, 3 numerical error)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    command = args.command if args.command != "experiment" else f"experiment {args.name}"
    try:
        run = RunConfig.build(command, config_path=args.config, overrides=build_overrides(args))
        if run.seed is None:
            run = run.with_seed(_fresh_seed())
            logger.info(f"No seed given, using generated seed {run.seed}")
        result = COMMANDS[args.command](args, run)
    except (MSKSDError, OSError, ValueError) as e:
        code = exit_code_for(e)
        logger.error(f"{command} failed: {e}")
        return code

    json.dump(result, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
