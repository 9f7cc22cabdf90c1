"""
Experiment Data

Contamination models, the synthetic Gaussian-location generator and loaders
for single-series CSV files (the bundled Galaxy velocities, the gene
expression surrogate or a user-supplied series).

CSV format: one numeric value per line, optional single header row
(auto-detected), UTF-8, LF or CRLF line endings.
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import numpy as np
import pandas as pd

from validation.errors import DataParseError, InputError

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
GALAXY_CSV = DATA_DIR / "galaxy.csv"
GENE_SURROGATE_CSV = DATA_DIR / "gene_surrogate.csv"

ContaminationMode = Literal["replace", "mixture"]


@dataclass(frozen=True)
class ContaminationSpec:
    """
    Contamination model.

    Attributes:
        epsilon: Contaminated fraction / probability, in [0, 1]
        y: Contaminant location
        noise_sd: Contaminant sd (> 0)
        mode: "replace" (swap exactly round(εn) points) or
              "mixture" (each point contaminated independently w.p. ε)
    """
    epsilon: float = 0.0
    y: float = 5.0
    noise_sd: float = 0.1
    mode: ContaminationMode = "replace"

    def __post_init__(self):
        """Validate contamination spec."""
        if not 0.0 <= self.epsilon <= 1.0:
            raise InputError(f"Contamination epsilon must lie in [0, 1], got {self.epsilon}")
        if not self.noise_sd > 0:
            raise InputError(f"Contamination noise_sd must be positive, got {self.noise_sd}")
        if self.mode not in ("replace", "mixture"):
            raise InputError(f"Unknown contamination mode '{self.mode}' (expected replace or mixture)")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ContaminationSpec":
        return cls(
            epsilon=float(data.get("epsilon", 0.0)),
            y=float(data.get("y", 5.0)),
            noise_sd=float(data.get("noise_sd", 0.1)),
            mode=data.get("mode", "replace"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"epsilon": self.epsilon, "y": self.y, "noise_sd": self.noise_sd, "mode": self.mode}


def replaced_count(n: int, epsilon: float) -> int:
    """round(ε n) with round-half-to-even."""
    return int(np.round(epsilon * n))


def generate_location_data(n: int, theta_star: float, spec: ContaminationSpec,
                           seed: Optional[int] = None) -> np.ndarray:
    """
    Draw n points from (1 - ε) N(θ⋆, 1) + ε N(y, noise_sd²).

    Args:
        n: Sample size
        theta_star: True location
        spec: Contamination spec (mode "mixture")
        seed: RNG seed

    Returns:
        Array of shape (n,)
    """
    if n < 1:
        raise InputError(f"Sample size must be positive, got {n}")
    if spec.mode != "mixture":
        raise InputError("generate_location_data draws contamination independently; use mode='mixture'")
    rng = np.random.default_rng(seed)
    contaminated = rng.random(n) < spec.epsilon
    clean = theta_star + rng.standard_normal(n)
    outliers = spec.y + spec.noise_sd * rng.standard_normal(n)
    return np.where(contaminated, outliers, clean)


def contaminate_dataset(data, spec: ContaminationSpec, seed: Optional[int] = None) -> np.ndarray:
    """
    Replace a uniformly chosen subset of round(ε n) points by N(y, noise_sd²) draws.

    Untouched points keep their values and positions.

    Args:
        data: Array of shape (n,)
        spec: Contamination spec (mode "replace")
        seed: RNG seed

    Returns:
        New array of shape (n,)
    """
    data = np.asarray(data, dtype=float).ravel()
    if spec.mode != "replace":
        raise InputError("contaminate_dataset replaces a fixed count; use mode='replace'")
    out = data.copy()
    k = replaced_count(data.shape[0], spec.epsilon)
    if k == 0:
        return out
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(data.shape[0], size=k, replace=False))
    out[idx] = spec.y + spec.noise_sd * rng.standard_normal(k)
    logger.debug(f"Contaminated {k}/{data.shape[0]} points at y={spec.y}")
    return out


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_series_csv(path: Union[str, Path], log_transform: bool = False) -> np.ndarray:
    """
    Load a single-series CSV.

    Args:
        path: CSV file
        log_transform: Apply log2(1 + x) after parsing

    Returns:
        Array of shape (n,)

    Raises:
        FileNotFoundError: If the file does not exist
        DataParseError: On empty files or non-numeric rows (with the line number)
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    rows = [(i + 1, line) for i, line in enumerate(text.splitlines()) if line.strip()]
    if not rows:
        raise DataParseError("file contains no data", path=str(path))

    header = None if _is_number(rows[0][1].split(",")[0].strip()) else 0
    frame = pd.read_csv(io.StringIO("\n".join(line for _, line in rows)), header=header, dtype=str)
    if frame.shape[1] != 1:
        raise DataParseError(f"expected one value per row, found {frame.shape[1]} columns", path=str(path))
    if frame.empty:
        raise DataParseError("file contains a header but no values", path=str(path))
    raw = frame.iloc[:, 0].str.strip()
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() | ~np.isfinite(values.fillna(0.0))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        line = rows[row + (0 if header is None else 1)][0]
        raise DataParseError(f"non-numeric value '{raw.iloc[row]}'", path=str(path), line=line)
    series = values.to_numpy(dtype=float)
    if log_transform:
        if np.any(series <= -1.0):
            raise DataParseError("log2(1 + x) needs values greater than -1", path=str(path))
        series = np.log2(1.0 + series)
    logger.info(f"Loaded {series.shape[0]} values from {path}")
    return series


def load_galaxy(unit_scale: float = 1e4) -> np.ndarray:
    """Bundled Galaxy velocities (km/s) divided by unit_scale."""
    return load_series_csv(GALAXY_CSV) / unit_scale
