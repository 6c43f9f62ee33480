"""
CSV and JSON artifacts for plotting.

CSV files have a one-line header and numbers with 17 significant digits,
so identical results give byte-identical files.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from eit_bistability.cavity import ScanPoint, detect_jumps
from eit_bistability.config import RunConfig
from eit_bistability.curves import OBCurve
from eit_bistability.serializer import dumps_pretty
from eit_bistability.sweep import SweepResult

logger = logging.getLogger(__name__)


def format_number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    logger.info("wrote %s", path)
    return path


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_pretty(data) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def write_spectrum(path: Path, delta_p: np.ndarray, response: np.ndarray) -> Path:
    return write_csv(
        path,
        ("delta_p", "re_response", "im_response"),
        zip(delta_p, response.real, response.imag),
    )


def curve_rows(curve: OBCurve) -> Iterable[tuple[Any, ...]]:
    return zip(
        curve.x,
        curve.y.real,
        curve.y.imag,
        curve.y_mag,
        curve.branch_ids,
        curve.stable_mask,
    )


def curve_summary(curve: OBCurve) -> dict[str, Any]:
    return {
        "turning_points": [tp.__dict__ for tp in curve.turning_points],
        "merged_points": [mp.__dict__ for mp in curve.merged_points],
        "thresholds": [t.__dict__ for t in curve.thresholds],
        "branches": [b.__dict__ for b in curve.branches],
        "max_multiplicity": curve.max_multiplicity,
    }


def write_curve(
    csv_path: Path,
    curve: OBCurve,
    json_path: Optional[Path] = None,
    config: Optional[RunConfig] = None,
) -> Path:
    write_csv(
        csv_path,
        ("x", "y_re", "y_im", "y_mag", "branch_id", "stable"),
        curve_rows(curve),
    )
    if json_path is not None:
        sidecar = curve_summary(curve)
        if config is not None:
            sidecar["config"] = config.model_dump(mode="json")
        write_json(json_path, sidecar)
    return csv_path


def write_hysteresis(path: Path, scan: Sequence[ScanPoint]) -> Path:
    return write_csv(
        path,
        ("direction", "y", "x", "converged"),
        ((p.direction, p.y, p.x, p.converged) for p in scan),
    )


def hysteresis_summary(scan: Sequence[ScanPoint]) -> dict[str, Any]:
    return {
        "jumps": [j.__dict__ for j in detect_jumps(scan)],
        "non_converged": sum(not p.converged for p in scan),
    }


def write_sweep(
    directory: Path,
    result: SweepResult,
    *,
    write_curves: bool = True,
) -> list[Path]:
    """
    ``sweep_summary.csv``, ``sweep.json`` and, for records carrying a curve,
    ``sweep_curve_<index>.csv``.
    """
    axis_names = [path for path, _ in result.spec.axes]
    n_pairs = max((len(r.thresholds) for r in result.records), default=0)
    header = [*axis_names, "n_turning_points", "max_multiplicity"]
    for k in range(n_pairs):
        header += [f"y_up_{k}", f"y_down_{k}"]
    header.append("error")

    rows = []
    for record in result.records:
        flat: list[Any] = []
        for k in range(n_pairs):
            flat += list(record.thresholds[k]) if k < len(record.thresholds) else [None, None]
        rows.append(
            [*record.values, record.n_turning_points, record.max_multiplicity, *flat,
             record.error or ""]
        )

    written = [write_csv(directory / "sweep_summary.csv", header, rows)]
    written.append(
        write_json(
            directory / "sweep.json",
            {
                "provenance": result.provenance,
                "records": [
                    {**r.to_dict(), "curve": None} for r in result.records
                ],
            },
        )
    )
    if write_curves:
        for record in result.records:
            if record.curve is not None:
                written.append(
                    write_csv(
                        directory / f"sweep_curve_{record.index}.csv",
                        ("x", "y_re", "y_im", "y_mag", "branch_id", "stable"),
                        curve_rows(record.curve),
                    )
                )
    return written


__all__ = [
    "format_number",
    "write_csv",
    "write_json",
    "write_spectrum",
    "write_curve",
    "write_hysteresis",
    "write_sweep",
    "curve_summary",
    "hysteresis_summary",
]
