"""
Experiment Reports

An ExperimentReport holds everything a runner produced. write_report lays it
out as a directory:

    <out>/config.json                   effective configuration and seed
    <out>/summary.csv                   one row per (method, cell)
    <out>/curve_<method>_<cell>.csv     columns: grid, density
    <out>/extras.json                   runner-specific results (if any)

Files are staged in a sibling "<out>.partial" directory and moved into place
only after every file is written.
"""

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from posterior import DensityCurve

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


@dataclass
class ExperimentReport:
    """
    Result of one experiment run.

    Attributes:
        experiment: Experiment id ("galaxy", "location", "gene", "blindness", "rate")
        config: Effective configuration (echoed to config.json)
        seed: Master seed
        rows: Summary rows (method, cell, posterior summaries, modes, timing)
        curves: Density curves keyed by "<method>_<cell>"
        extras: Runner-specific JSON-friendly results
    """
    experiment: str
    config: Dict[str, Any]
    seed: int
    rows: List[Dict[str, Any]] = field(default_factory=list)
    curves: Dict[str, DensityCurve] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)

    def summary_frame(self, include_timing: bool = False) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows)
        if not include_timing and "wall_time_ms" in frame.columns:
            frame = frame.drop(columns=["wall_time_ms"])
        return frame

    def rows_for(self, method: str) -> List[Dict[str, Any]]:
        return [row for row in self.rows if row["method"] == method]


def _encode(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return ";".join(FLOAT_FORMAT % v if isinstance(v, float) else str(v) for v in value)
    return value


def write_report(report: ExperimentReport, out_dir: Union[str, Path],
                 config: Optional[Dict[str, Any]] = None, include_timing: bool = False) -> Path:
    """
    Write a report directory.

    Output is byte-identical for identical reports unless include_timing
    adds the wall_time_ms column.

    Args:
        report: Experiment report
        out_dir: Target directory (replaced if it exists)
        config: Configuration to echo instead of report.config
        include_timing: Keep wall_time_ms in summary.csv

    Returns:
        Path of the written directory
    """
    out_dir = Path(out_dir)
    staging = out_dir.with_name(out_dir.name + ".partial")
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir(parents=True)
    try:
        echo = dict(config if config is not None else report.config)
        echo.setdefault("seed", report.seed)
        with open(staging / "config.json", "w", encoding="utf-8", newline="\n") as f:
            json.dump(echo, f, indent=2, sort_keys=True)
            f.write("\n")

        summary = report.summary_frame(include_timing)
        if not summary.empty:
            summary = summary.apply(lambda col: col.map(_encode))
        summary.to_csv(staging / "summary.csv", index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

        for key in sorted(report.curves):
            report.curves[key].to_frame().to_csv(
                staging / f"curve_{key}.csv", index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
            )

        if report.extras:
            with open(staging / "extras.json", "w", encoding="utf-8", newline="\n") as f:
                json.dump(report.extras, f, indent=2, sort_keys=True)
                f.write("\n")
    except Exception:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    if out_dir.exists():
        shutil.rmtree(out_dir)
    staging.rename(out_dir)
    logger.info(f"[OK] Report written to {out_dir} ({len(report.curves)} curves, {len(report.rows)} rows)")
    return out_dir
