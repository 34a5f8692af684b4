"""Read telemetry and irradiance CSV files into validated hourly series.

File formats:

* telemetry: header ``timestamp,pv_energy_wh,cons_energy_wh,soc_pct``
* irradiance: header ``timestamp,ghi_wh_m2,source`` with source in
  {forecast, analysis}

Timestamps are ISO-8601 ``YYYY-MM-DDTHH:00:00Z`` (UTC, hour-aligned).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .core import HOUR, HourlyTimeSeries, SeriesKind
from .errors import DuplicateTimestamp, EmptyFile, GapTooLong, MalformedRow

log = logging.getLogger(__name__)

TELEMETRY_HEADER = ["timestamp", "pv_energy_wh", "cons_energy_wh", "soc_pct"]
IRRADIANCE_HEADER = ["timestamp", "ghi_wh_m2", "source"]


class IrradianceSource(Enum):
    FORECAST_DAY_AHEAD = "forecast"
    HISTORICAL_ANALYSIS = "analysis"


@dataclass
class TelemetryRecord:
    timestamp: datetime
    pv_energy_wh: float
    cons_energy_wh: float
    soc_pct: float


@dataclass
class IrradianceRecord:
    timestamp: datetime
    ghi_wh_per_m2: float
    source: IrradianceSource


@dataclass
class GapPolicy:
    """How to fill holes in an hourly record stream.

    Energy gaps are zero-filled (with a logged warning), SOC gaps carry the
    last observation forward. Gaps longer than ``max_gap_h`` are an error.
    """

    max_gap_h: int = 6


def _parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks timezone")
    ts = ts.astimezone(timezone.utc)
    if ts.minute or ts.second or ts.microsecond:
        raise ValueError("timestamp not hour-aligned")
    return ts


def _read_rows(path, expected_header):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        if [h.strip() for h in header] != expected_header:
            raise MalformedRow([1], f"{path}: expected header {','.join(expected_header)}")
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=2) if row]
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return rows


def _check_duplicates(records, path, key=lambda r: r.timestamp):
    seen = set()
    for rec in records:
        k = key(rec)
        if k in seen:
            raise DuplicateTimestamp(f"{path}: duplicate entry for {k}")
        seen.add(k)


def parse_telemetry_csv(path) -> list[TelemetryRecord]:
    """Parse a telemetry CSV into time-sorted records.

    Rows that fail parsing or the record invariants (negative energy, SOC
    outside [0, 100]) are collected and reported together with their line
    numbers.
    """
    records = []
    bad_lines, messages = [], []
    for lineno, row in _read_rows(path, TELEMETRY_HEADER):
        try:
            if len(row) != 4:
                raise ValueError(f"expected 4 fields, found {len(row)}")
            ts = _parse_timestamp(row[0])
            pv, cons, soc = float(row[1]), float(row[2]), float(row[3])
            if pv < 0 or cons < 0:
                raise ValueError("negative energy")
            if not 0 <= soc <= 100:
                raise ValueError(f"soc {soc} outside [0, 100]")
        except ValueError as exc:
            bad_lines.append(lineno)
            messages.append(str(exc))
            continue
        records.append(TelemetryRecord(ts, pv, cons, soc))
    if bad_lines:
        raise MalformedRow(bad_lines, f"{path}: {messages[0]}")
    records.sort(key=lambda r: r.timestamp)
    _check_duplicates(records, path)
    return records


def parse_irradiance_csv(path) -> list[IrradianceRecord]:
    """Parse an irradiance CSV into time-sorted records.

    Forecast and analysis rows may share timestamps; duplicates are checked
    per (timestamp, source).
    """
    records = []
    bad_lines, messages = [], []
    valid_sources = {s.value: s for s in IrradianceSource}
    for lineno, row in _read_rows(path, IRRADIANCE_HEADER):
        try:
            if len(row) != 3:
                raise ValueError(f"expected 3 fields, found {len(row)}")
            ts = _parse_timestamp(row[0])
            ghi = float(row[1])
            if ghi < 0:
                raise ValueError("negative irradiation")
            source = valid_sources.get(row[2].strip())
            if source is None:
                raise ValueError(f"unknown source {row[2]!r}")
        except ValueError as exc:
            bad_lines.append(lineno)
            messages.append(str(exc))
            continue
        records.append(IrradianceRecord(ts, ghi, source))
    if bad_lines:
        raise MalformedRow(bad_lines, f"{path}: {messages[0]}")
    records.sort(key=lambda r: (r.timestamp, r.source.value))
    _check_duplicates(records, path, key=lambda r: (r.timestamp, r.source))
    return records


def _fill_to_grid(stamped: dict, start, n_hours, kind, policy, label):
    """Place stamped values on a contiguous hourly grid, filling gaps."""
    values = np.empty(n_hours)
    gap_run = 0
    last = None
    for i in range(n_hours):
        ts = start + HOUR * i
        if ts in stamped:
            values[i] = stamped[ts]
            last = stamped[ts]
            gap_run = 0
            continue
        gap_run += 1
        if gap_run > policy.max_gap_h:
            raise GapTooLong(
                f"{label}: gap longer than {policy.max_gap_h} h at {ts}")
        if kind is SeriesKind.ENERGY_WH:
            values[i] = 0.0
            log.warning("%s: missing hour %s zero-filled", label, ts.isoformat())
        else:
            # SOC: last observation carried forward
            values[i] = last if last is not None else 0.0
    return HourlyTimeSeries(start, values, kind)


def to_hourly(records, policy: GapPolicy | None = None):
    """Resample records onto a contiguous hourly grid from the first to the
    last stamp (both inclusive, so the length is the span in hours + 1).

    Telemetry records yield a ``(pv, cons, soc)`` tuple of series; irradiance
    records yield a single GHI series (mixed sources are collapsed; split the
    records by source first if that matters).
    """
    policy = policy or GapPolicy()
    if len(records) < 2:
        raise ValueError("need at least 2 records to build an hourly grid")
    records = sorted(records, key=lambda r: r.timestamp)
    start = records[0].timestamp
    n_hours = int((records[-1].timestamp - start) / HOUR) + 1

    if isinstance(records[0], TelemetryRecord):
        pv = {r.timestamp: r.pv_energy_wh for r in records}
        cons = {r.timestamp: r.cons_energy_wh for r in records}
        soc = {r.timestamp: r.soc_pct for r in records}
        return (
            _fill_to_grid(pv, start, n_hours, SeriesKind.ENERGY_WH, policy, "pv_energy_wh"),
            _fill_to_grid(cons, start, n_hours, SeriesKind.ENERGY_WH, policy, "cons_energy_wh"),
            _fill_to_grid(soc, start, n_hours, SeriesKind.SOC_PCT, policy, "soc_pct"),
        )
    ghi = {r.timestamp: r.ghi_wh_per_m2 for r in records}
    return _fill_to_grid(ghi, start, n_hours, SeriesKind.ENERGY_WH, policy, "ghi_wh_m2")


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_telemetry_csv(records, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TELEMETRY_HEADER)
        for r in records:
            writer.writerow([_format_timestamp(r.timestamp),
                             f"{r.pv_energy_wh:.6g}", f"{r.cons_energy_wh:.6g}",
                             f"{r.soc_pct:.6g}"])


def write_irradiance_csv(records, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(IRRADIANCE_HEADER)
        for r in records:
            writer.writerow([_format_timestamp(r.timestamp),
                             f"{r.ghi_wh_per_m2:.6g}", r.source.value])
