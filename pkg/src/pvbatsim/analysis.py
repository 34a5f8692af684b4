"""Operational KPIs, the security-buffer sweep, and report emission.

Percentiles use linear interpolation between order statistics throughout so
fan-chart and coverage-interval outputs are reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import HourlyTimeSeries, SiteConfig
from .errors import EmptySpan
from .simulator import ScenarioInputs, ScenarioResult, build_plan_cache, run_scenario
from .strategy import StrategyParams

FULL_CHARGE_SOC_PCT = 99.5

SWEEP_CSV_COLUMNS = [
    "soc_low_limit_pct", "system_id", "avg_soc_pct", "full_charge_h_per_day",
    "outage_h", "pv_gen_wh", "consumption_wh", "efficiency", "dcr",
    "capacity_factor", "soc_ci_lo", "soc_ci_hi",
]


@dataclass
class KpiReport:
    pv_generation_wh: float
    consumption_wh: float
    avg_system_efficiency: float
    soc_ci_75: tuple[float, float]
    direct_consumption_rate: float
    capacity_factor: float
    outage_hours: int
    avg_soc_pct: float
    full_charge_hours_per_day: float


@dataclass
class SweepRow:
    soc_low_limit_pct: float
    system_id: str
    kpis: KpiReport


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def for_system(self, system_id: str) -> list[SweepRow]:
        return [r for r in self.rows if r.system_id == system_id]


def default_sweep_limits(n: int = 40, lo: float = 20.0, hi: float = 100.0) -> np.ndarray:
    """The default sweep grid: n buffer values uniform on [lo, hi]."""
    return np.linspace(lo, hi, n)


def compute_kpis(trajectory: HourlyTimeSeries, flows, site: SiteConfig) -> KpiReport:
    """Table-style indicators for one simulated (or historical) span.

    Generation is counted at the panel (pre-MPPT DC, after curtailment);
    consumption is the AC energy actually served. The 75% SOC interval is the
    central coverage interval around the median ([12.5, 87.5] percentiles).
    """
    if len(trajectory) == 0 or not flows:
        raise EmptySpan("cannot compute KPIs over an empty span")
    if len(trajectory) != len(flows):
        raise EmptySpan("trajectory and flows must cover the same hours")

    eff = site.eff
    pv_direct = np.array([f.pv_direct_wh for f in flows])
    charge = np.array([f.batt_charge_wh for f in flows])
    discharge = np.array([f.batt_discharge_wh for f in flows])
    unserved = np.array([f.unserved_wh for f in flows])

    generation = float(pv_direct.sum() + charge.sum() / eff.pv_to_battery)
    served_direct = float(pv_direct.sum() * eff.pv_to_load)
    served_batt = float(discharge.sum() * eff.battery_to_load)
    consumption = served_direct + served_batt

    soc = trajectory.values
    ci = np.percentile(soc, [12.5, 87.5], method="linear")
    hours = len(soc)
    days = hours / 24.0
    return KpiReport(
        pv_generation_wh=generation,
        consumption_wh=consumption,
        avg_system_efficiency=consumption / generation if generation > 0 else 0.0,
        soc_ci_75=(float(ci[0]), float(ci[1])),
        direct_consumption_rate=served_direct / consumption if consumption > 0 else 0.0,
        capacity_factor=float(generation / hours / site.pv_peak_w),
        outage_hours=int(np.count_nonzero(unserved > 0)),
        avg_soc_pct=float(soc.mean()),
        full_charge_hours_per_day=float(np.count_nonzero(soc >= FULL_CHARGE_SOC_PCT) / days),
    )


def sweep_soc_low_limit(inputs: ScenarioInputs, provider, site: SiteConfig,
                        eta_charge: float, limits=None,
                        system_id: str = "sys") -> SweepResult:
    """One forecast-strategy run per security-buffer value.

    The forecast-derived planning inputs are computed once and shared across
    all runs (they do not depend on the buffer), which keeps a 40-point sweep
    over a year tractable. Rows come back in ascending limit order.
    """
    limits = default_sweep_limits() if limits is None else np.asarray(limits, dtype=float)
    if np.any(np.diff(limits) <= 0):
        raise ValueError("sweep limits must be strictly increasing")

    base = StrategyParams(float(limits[0]), site.battery.capacity_wh, eta_charge)
    cache = build_plan_cache(inputs, provider, base)
    rows = []
    for limit in limits:
        params = StrategyParams(float(limit), site.battery.capacity_wh, eta_charge)
        result = run_scenario(inputs, site, strategy="forecast", params=params,
                              plan_cache=cache, collect_setpoints=False)
        rows.append(SweepRow(float(limit), system_id,
                             compute_kpis(result.trajectory, result.flows, site)))
    return SweepResult(rows)


# ---------------------------------------------------------------------------
# Fan charts
# ---------------------------------------------------------------------------

FAN_PERCENTILES = (5, 25, 50, 75, 95)


def fan_chart_percentiles(series: HourlyTimeSeries,
                          percentiles=FAN_PERCENTILES) -> np.ndarray:
    """Hour-of-day distribution summary: shape (24, len(percentiles)).

    Groups every sample by its UTC hour of day and takes percentiles with
    linear interpolation.
    """
    if len(series) == 0:
        raise EmptySpan("cannot build a fan chart from an empty series")
    start_hour = series.start.hour
    out = np.empty((24, len(percentiles)))
    idx = np.arange(len(series.values))
    hod = (start_hour + idx) % 24
    for h in range(24):
        vals = series.values[hod == h]
        if len(vals) == 0:
            out[h, :] = np.nan
        else:
            out[h, :] = np.percentile(vals, percentiles, method="linear")
    return out


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _row_values(r: SweepRow) -> list:
    k = r.kpis
    return [r.soc_low_limit_pct, r.system_id, k.avg_soc_pct,
            k.full_charge_hours_per_day, k.outage_hours, k.pv_generation_wh,
            k.consumption_wh, k.avg_system_efficiency, k.direct_consumption_rate,
            k.capacity_factor, k.soc_ci_75[0], k.soc_ci_75[1]]


def emit_report(result: SweepResult, out_dir, fmt: str = "csv",
                config_hash: str | None = None, seed: int | None = None) -> list[Path]:
    """Write the sweep as ``sweep.csv`` and/or ``sweep.json``.

    The JSON document embeds the config hash and seed so a report can be tied
    back to the exact run that produced it. An empty sweep is an error, never
    an empty file.
    """
    if not result.rows:
        raise EmptySpan("refusing to emit an empty sweep")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        path = out_dir / "sweep.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_CSV_COLUMNS)
            for r in result.rows:
                writer.writerow([f"{v:.10g}" if isinstance(v, float) else v
                                 for v in _row_values(r)])
        written.append(path)
    else:
        path = out_dir / "sweep.json"
        doc = {
            "config_hash": config_hash,
            "seed": seed,
            "columns": SWEEP_CSV_COLUMNS,
            "rows": [_row_values(r) for r in result.rows],
        }
        path.write_text(json.dumps(doc, indent=2))
        written.append(path)
    return written


def parse_sweep_csv(path) -> SweepResult:
    """Read back a ``sweep.csv`` written by emit_report."""
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for rec in reader:
            kpis = KpiReport(
                pv_generation_wh=float(rec["pv_gen_wh"]),
                consumption_wh=float(rec["consumption_wh"]),
                avg_system_efficiency=float(rec["efficiency"]),
                soc_ci_75=(float(rec["soc_ci_lo"]), float(rec["soc_ci_hi"])),
                direct_consumption_rate=float(rec["dcr"]),
                capacity_factor=float(rec["capacity_factor"]),
                outage_hours=int(rec["outage_h"]),
                avg_soc_pct=float(rec["avg_soc_pct"]),
                full_charge_hours_per_day=float(rec["full_charge_h_per_day"]),
            )
            rows.append(SweepRow(float(rec["soc_low_limit_pct"]), rec["system_id"], kpis))
    return SweepResult(rows)


def emit_plot_data(result: SweepResult, out_dir,
                   fan_series: dict[str, dict[str, HourlyTimeSeries]] | None = None
                   ) -> list[Path]:
    """Long-format CSV bundles ready for any plotting tool.

    Three files map the sweep onto its figures (outage hours, average SOC,
    fully-charged hours per day as functions of the buffer, one row per
    (limit, system)). When hourly series are passed (system id -> named
    series), one fan-chart file per series is written with hour-of-day
    percentiles.
    """
    if not result.rows:
        raise EmptySpan("refusing to emit an empty sweep")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    figures = [
        ("outage_hours.csv", lambda k: k.outage_hours),
        ("avg_soc.csv", lambda k: k.avg_soc_pct),
        ("full_charge_hours.csv", lambda k: k.full_charge_hours_per_day),
    ]
    for name, getter in figures:
        path = out_dir / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["soc_low_limit_pct", "system_id", "value"])
            for r in result.rows:
                writer.writerow([f"{r.soc_low_limit_pct:.10g}", r.system_id,
                                 f"{getter(r.kpis):.10g}"])
        written.append(path)

    for system_id, named in (fan_series or {}).items():
        for channel, series in named.items():
            table = fan_chart_percentiles(series)
            path = out_dir / f"fan_{system_id}_{channel}.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["hour"] + [f"p{p}" for p in FAN_PERCENTILES])
                for h in range(24):
                    writer.writerow([h] + [f"{v:.10g}" for v in table[h]])
            written.append(path)
    return written
