"""Readers and writers: IMS-style text blocks, CSV, and factor-table JSON.

Factor JSON layout::

    {
      "channels": ["B1", ...],
      "lag_order": 1,
      "threshold": 0.1,
      "tail_window": 5000,
      "structural": [[...], ...],          # G x G, row = effect
      "lagged": [[[...], ...], ...],       # D matrices, lag 1 first
      "preprocessing": {"means": [...], "stds": [...]}
    }

Only ``channels``, ``structural`` and ``lagged`` are required on read.
Floats are written with ``repr`` precision so reads are exact.
"""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import (
    EmptyFile,
    HeaderMismatch,
    InconsistentColumnCount,
    MalformedLine,
    SchemaViolation,
)
from .model import CausalFactors, MultiChannelSeries, default_channel_names, validate_factors

IMS_SAMPLE_INTERVAL = 50e-6

PathLike = str | os.PathLike


def _parse_row(tokens: Sequence[str], line_no: int, raw: str) -> list[float]:
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise MalformedLine(line_no, raw) from None
    if not all(math.isfinite(v) for v in values):
        raise MalformedLine(line_no, raw, "non-finite value")
    return values


def _rows_to_series(rows, names, sample_interval, path) -> MultiChannelSeries:
    if not rows:
        raise EmptyFile(f"{path}: no samples")
    return MultiChannelSeries(np.array(rows, dtype=float), tuple(names), sample_interval)


def read_ims_file(
    path: PathLike,
    sample_interval: float | None = IMS_SAMPLE_INTERVAL,
    channel_names: Sequence[str] | None = None,
) -> MultiChannelSeries:
    """Read one whitespace-delimited block: one sample per line, no header.

    The column count is taken from the first non-blank line. Channels default
    to ``B1..BG``.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, "r") as fh:
        for line_no, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens:
                continue
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise InconsistentColumnCount(line_no, width, len(tokens))
            rows.append(_parse_row(tokens, line_no, raw.rstrip("\n")))
    names = channel_names or default_channel_names(width or 0, prefix="B")
    return _rows_to_series(rows, names, sample_interval, path)


def write_ims_file(series: MultiChannelSeries, path: PathLike) -> None:
    with open(path, "w", newline="\n") as fh:
        for row in series.data:
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")


def _looks_numeric(row: Sequence[str]) -> bool:
    try:
        [float(t) for t in row]
    except ValueError:
        return False
    return True


def read_csv(
    path: PathLike, has_header: bool | None = None, sample_interval: float | None = None
) -> MultiChannelSeries:
    """Comma-separated numeric matrix, one sample per row.

    ``has_header=None`` sniffs: a first row that does not parse as numbers is
    taken as channel names.
    """
    with open(path, "r", newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    numbered = [(i, r) for i, r in enumerate(rows, start=1) if any(c.strip() for c in r)]
    if not numbered:
        raise EmptyFile(f"{path}: no rows")

    names: Sequence[str] | None = None
    if has_header is None:
        has_header = not _looks_numeric(numbered[0][1])
    if has_header:
        _, header = numbered.pop(0)
        names = [h.strip() for h in header]
        if not numbered:
            raise EmptyFile(f"{path}: header only")
        if len(set(names)) != len(names) or not all(names):
            raise HeaderMismatch(f"{path}: header names must be unique and non-empty: {names}")

    width = len(names) if names is not None else len(numbered[0][1])
    data = []
    for line_no, row in numbered:
        if len(row) != width:
            if names is not None and line_no == numbered[0][0]:
                raise HeaderMismatch(f"{path}: header has {width} names, data has {len(row)} columns")
            raise InconsistentColumnCount(line_no, width, len(row))
        data.append(_parse_row([c.strip() for c in row], line_no, ",".join(row)))
    return _rows_to_series(data, names or default_channel_names(width), sample_interval, path)


def write_csv(series: MultiChannelSeries, path: PathLike, header: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(series.channel_names)
        for row in series.data:
            writer.writerow([repr(float(v)) for v in row])


def read_series(path: PathLike, **kw) -> MultiChannelSeries:
    """Dispatch on extension: ``.csv`` to `read_csv`, anything else to `read_ims_file`."""
    if Path(path).suffix.lower() == ".csv":
        return read_csv(path, **kw)
    return read_ims_file(path, **kw)


def factors_to_dict(factors: CausalFactors, **meta: Any) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "channels": list(factors.channel_names),
        "lag_order": factors.lag_order,
    }
    for key in ("threshold", "tail_window"):
        if meta.get(key) is not None:
            doc[key] = meta[key]
    doc["structural"] = factors.structural.tolist()
    doc["lagged"] = [m.tolist() for m in factors.lagged]
    if meta.get("means") is not None:
        doc["preprocessing"] = {
            "means": [float(v) for v in meta["means"]],
            "stds": [float(v) for v in meta["stds"]],
        }
    return doc


def write_factors_json(result, path: PathLike) -> None:
    """Write an `EstimationResult` (thresholded factors plus run metadata) or
    bare `CausalFactors`."""
    if isinstance(result, CausalFactors):
        doc = factors_to_dict(result)
    else:
        cfg = result.config
        doc = factors_to_dict(
            result.factors,
            threshold=cfg.threshold,
            tail_window=result.tail_window_used,
            means=result.means,
            stds=result.stds,
        )
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _matrix(value: Any, g: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != g:
        raise SchemaViolation(where, f"expected {g} rows")
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != g:
            raise SchemaViolation(f"{where}/{i}", f"expected {g} numbers")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise SchemaViolation(f"{where}/{i}/{j}", "expected a finite number")
    return np.array(value, dtype=float)


def factors_from_dict(doc: Any) -> CausalFactors:
    if not isinstance(doc, dict):
        raise SchemaViolation("/", "expected an object")
    for key in ("channels", "structural", "lagged"):
        if key not in doc:
            raise SchemaViolation(f"/{key}", "missing")
    channels = doc["channels"]
    if not isinstance(channels, list) or not channels or not all(isinstance(c, str) for c in channels):
        raise SchemaViolation("/channels", "expected a non-empty list of strings")
    g = len(channels)
    structural = _matrix(doc["structural"], g, "/structural")
    lagged_doc = doc["lagged"]
    if not isinstance(lagged_doc, list):
        raise SchemaViolation("/lagged", "expected a list of matrices")
    lagged = tuple(_matrix(m, g, f"/lagged/{d}") for d, m in enumerate(lagged_doc))
    if "lag_order" in doc and doc["lag_order"] != len(lagged):
        raise SchemaViolation("/lag_order", f"says {doc['lag_order']} but {len(lagged)} lagged matrices present")
    return validate_factors(CausalFactors(structural, lagged, tuple(channels)))


def read_factors_json(path: PathLike) -> CausalFactors:
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation("/", f"invalid JSON: {exc}") from None
    return factors_from_dict(doc)
