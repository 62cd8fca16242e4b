"""CSV and JSON persistence for interval datasets.

CSV cells hold a number (a precise value), "[lo,hi]" or "lo..hi" (an interval).
Label cells hold 0, 1, ? or [0,1]. The writer emits numbers with the shortest
round-trip representation and always uses the bracket form for intervals.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from typing import BinaryIO, List, Optional, Tuple

from pydantic import BaseModel, Field

from models.dataset import DataPoint, Dataset
from models.interval import Interval, UncertainLabel
from models.run import RunStamp
from utils.errors import CsvFormatError, EmptyDatasetError, InvalidIntervalError

logger = logging.getLogger(__name__)

_BRACKET = re.compile(r"^\[\s*([^,\[\]]+?)\s*,\s*([^,\[\]]+?)\s*\]$")
_UNKNOWN_LABELS = {"?", "[0,1]"}


class CsvSchema(BaseModel):
    label_column: str = Field("y", description="Header of the single label column.")
    require_label: bool = Field(
        True, description="When false, a missing label column reads every label as unknown."
    )
    feature_columns: Optional[Tuple[str, ...]] = Field(
        None, description="Feature headers in order; default is every other column."
    )

    model_config = {"frozen": True}


def _parse_number(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"cannot parse {text!r} as a number", row=row, column=column)
    if not math.isfinite(value):
        raise CsvFormatError(f"non-finite value {text!r}", row=row, column=column)
    return value


def parse_interval_cell(cell: str, row: int = 0, column: str = "?") -> Interval:
    text = cell.strip()
    if not text:
        raise CsvFormatError("empty cell", row=row, column=column)
    match = _BRACKET.match(text)
    if match:
        lo_text, hi_text = match.groups()
    elif ".." in text:
        lo_text, _, hi_text = text.partition("..")
    else:
        value = _parse_number(text, row, column)
        return Interval(lo=value, hi=value)
    lo = _parse_number(lo_text.strip(), row, column)
    hi = _parse_number(hi_text.strip(), row, column)
    if lo > hi:
        raise InvalidIntervalError(lo, hi, where=f"row {row}, column '{column}'")
    return Interval(lo=lo, hi=hi)


def parse_label_cell(cell: str, row: int = 0, column: str = "y") -> UncertainLabel:
    text = cell.strip().replace(" ", "")
    if text == "0":
        return UncertainLabel.ZERO
    if text == "1":
        return UncertainLabel.ONE
    if text in _UNKNOWN_LABELS:
        return UncertainLabel.UNKNOWN
    raise CsvFormatError(f"label {cell!r} is not one of 0, 1, ?, [0,1]", row=row, column=column)


def _rejoin_brackets(cells: List[str]) -> List[str]:
    """Glue back unquoted "[lo,hi]" cells that the comma delimiter split in two."""
    joined: List[str] = []
    pending: Optional[str] = None
    for cell in cells:
        if pending is not None:
            pending += "," + cell
            if "]" in cell:
                joined.append(pending)
                pending = None
        elif cell.strip().startswith("[") and "]" not in cell:
            pending = cell
        else:
            joined.append(cell)
    if pending is not None:
        joined.append(pending)
    return joined


def load_csv(source: BinaryIO, schema: CsvSchema = CsvSchema()) -> Dataset:
    """Read a dataset from a UTF-8 CSV byte stream. Row numbers in errors are 0-based data rows."""
    text = io.TextIOWrapper(source, encoding="utf-8-sig", newline="")
    try:
        return _read_rows(csv.reader(text), schema)
    finally:
        text.detach()


def _is_comment(cells: List[str]) -> bool:
    return bool(cells) and cells[0].lstrip().startswith("#")


def _read_rows(reader, schema: CsvSchema) -> Dataset:
    rows = (cells for cells in reader if not _is_comment(cells))
    try:
        header = [h.strip() for h in next(rows)]
    except StopIteration:
        raise CsvFormatError("missing header row")

    label_count = header.count(schema.label_column)
    if label_count > 1 or (label_count == 0 and schema.require_label):
        raise CsvFormatError(f"header must contain exactly one label column '{schema.label_column}'")
    label_index = header.index(schema.label_column) if label_count else None
    if schema.feature_columns is None:
        feature_names = [h for h in header if h != schema.label_column]
    else:
        feature_names = list(schema.feature_columns)
        missing = [name for name in feature_names if name not in header]
        if missing:
            raise CsvFormatError(f"feature columns not in header: {missing}")
    feature_indices = [header.index(name) for name in feature_names]

    points = []
    for row, cells in enumerate(rows):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            cells = _rejoin_brackets(cells)
        if len(cells) != len(header):
            raise CsvFormatError(f"ragged row: {len(cells)} cells, header has {len(header)}", row=row)
        features = tuple(
            parse_interval_cell(cells[j], row=row, column=header[j]) for j in feature_indices
        )
        label = (
            UncertainLabel.UNKNOWN
            if label_index is None
            else parse_label_cell(cells[label_index], row=row, column=schema.label_column)
        )
        points.append(DataPoint(features=features, label=label))

    logger.debug("Loaded %d rows with %d features", len(points), len(feature_names))
    return Dataset(feature_names=tuple(feature_names), label_name=schema.label_column, points=tuple(points))


def format_number(value: float) -> str:
    return repr(float(value))


def format_interval_cell(iv: Interval) -> str:
    if iv.degenerate:
        return format_number(iv.lo)
    return f"[{format_number(iv.lo)},{format_number(iv.hi)}]"


def run_comment(run: Optional[RunStamp]) -> str:
    """Provenance line the reader skips: "# run: {...}"."""
    return "" if run is None else f"# run: {run.model_dump_json()}\n"


def dump_csv(d: Dataset, run: Optional[RunStamp] = None) -> bytes:
    buffer = io.StringIO()
    buffer.write(run_comment(run))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([*d.feature_names, d.label_name])
    for p in d.points:
        writer.writerow([*(format_interval_cell(iv) for iv in p.features), p.label.value])
    return buffer.getvalue().encode("utf-8")


def save_csv(d: Dataset, sink: BinaryIO, run: Optional[RunStamp] = None) -> None:
    sink.write(dump_csv(d, run))


def dataset_to_json(d: Dataset, run: Optional[RunStamp] = None) -> str:
    """Dataset JSON; the optional run stamp sits under "run" and is ignored on reading."""
    payload = d.model_dump(mode="json")
    if run is not None:
        payload = {"run": run.model_dump(mode="json"), **payload}
    return json.dumps(payload, indent=2)


def dataset_from_json(payload: str) -> Dataset:
    d = Dataset.model_validate_json(payload)
    if d.n == 0:
        raise EmptyDatasetError("dataset JSON holds no rows")
    return d
