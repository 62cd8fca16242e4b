"""CSV tables behind the evaluation plots. Data only; rendering is left to the reader's tool.

Each table starts with the run provenance comment. Undefined statistics are empty cells.
"""
from __future__ import annotations

import csv
import io
from typing import Iterable, Optional, Sequence

import numpy as np

from models.evaluation import Decision, Roc3D, RocBand, RocCurve, ScatterPoint
from models.run import RunStamp
from services.dataset_io import format_number, run_comment


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format_number(value)
    return str(value)


def _table(header: Sequence[str], rows: Iterable[Sequence], run: Optional[RunStamp]) -> bytes:
    buffer = io.StringIO()
    buffer.write(run_comment(run))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue().encode("utf-8")


def roc_csv(curves: dict[str, RocCurve], run: Optional[RunStamp] = None) -> bytes:
    """One ROC per named score (e.g. lower and upper probability), threshold descending."""
    rows = [
        (name, p.threshold, p.fpr, p.sensitivity)
        for name, curve in curves.items()
        for p in curve.points
    ]
    return _table(("curve", "C", "fpr", "s"), rows, run)


def roc_band_csv(band: RocBand, run: Optional[RunStamp] = None) -> bytes:
    return _table(("fpr", "s_lo", "s_hi"), zip(band.fpr, band.s_lo, band.s_hi), run)


def roc3d_csv(r: Roc3D, run: Optional[RunStamp] = None) -> bytes:
    rows = ((p.threshold, p.fpr_prime, p.s_prime, p.sigma, p.tau) for p in r.points)
    return _table(("C", "fpr_prime", "s_prime", "sigma", "tau"), rows, run)


def scatter_csv(points: Sequence[ScatterPoint], run: Optional[RunStamp] = None) -> bytes:
    rows = ((p.outcome, p.jittered, p.p_lo, p.p_hi) for p in points)
    return _table(("outcome", "jittered", "p_lo", "p_hi"), rows, run)


def envelope_csv(
    column: str, grid: np.ndarray, p_lo: np.ndarray, p_hi: np.ndarray, run: Optional[RunStamp] = None
) -> bytes:
    return _table((column, "p_lo", "p_hi"), zip(grid.tolist(), p_lo.tolist(), p_hi.tolist()), run)


def predictions_csv(
    p_lo: np.ndarray, p_hi: np.ndarray, decisions: Sequence[Decision], run: Optional[RunStamp] = None
) -> bytes:
    rows = ((i, lo, hi, d.value) for i, (lo, hi, d) in enumerate(zip(p_lo.tolist(), p_hi.tolist(), decisions)))
    return _table(("row", "p_lo", "p_hi", "decision"), rows, run)
