"""
MS-KSD command-line entry point.

Usage:
    python msksd.py ksd data.csv --compare
    python msksd.py experiment galaxy --seed 7
    python msksd.py fit data.csv --model kef --mcmc
    python msksd.py bi expression.csv

See cli/main.py for all flags.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from cli import main

if __name__ == "__main__":
    sys.exit(main())
