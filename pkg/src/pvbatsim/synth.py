"""Synthetic telemetry and irradiance fixtures.

Three profiles:

* ``market_like``: a commercial market stall system; daytime-only load,
  Sundays nearly closed, day-level Gaussian noise on the load level and on
  cloudiness, telemetry produced by replaying the truth under the greedy
  strategy (so PV telemetry carries realistic curtailment and the SOC
  channel reflects greedy operation).
* ``single_peak``: a fully deterministic, lossless fixture with a flat PV
  plateau and a flat evening load block; the net-surplus window is one
  contiguous run, which makes planning arithmetic exactly checkable.
* ``high_load``: the market profile scaled up with evening hours past
  sunset, deep enough that full daily charges stay necessary.

All randomness comes from one seeded generator per bundle; equal seeds give
byte-identical fixture files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .core import (HOUR, BatterySpec, EfficiencyChain, HourlyTimeSeries,
                   SeriesKind, SiteConfig)
from .ingest import (IrradianceRecord, IrradianceSource, TelemetryRecord,
                     write_irradiance_csv, write_telemetry_csv)
from .forecast_pv import project_to_poa, sun_position
from .simulator import ScenarioInputs, run_scenario

PROFILES = ("market_like", "single_peak", "high_load")

# Relative weights of the market's hourly load, local time. Open 07-21 with
# an early-evening peak outlasting the sun (lights, refrigeration); no
# consumption at night (the grid is switched off).
_MARKET_SHAPE = np.zeros(24)
_MARKET_SHAPE[7:21] = [0.30, 0.50, 0.70, 0.80, 0.90, 1.00, 1.00,
                       0.95, 0.95, 1.00, 1.10, 1.20, 1.00, 0.50]

_HIGH_LOAD_SHAPE = np.zeros(24)
_HIGH_LOAD_SHAPE[7:22] = [0.30, 0.50, 0.70, 0.80, 0.90, 1.00, 1.00,
                          0.95, 0.95, 1.00, 1.10, 1.10, 1.00, 0.70, 0.40]

_SUNDAY_SCALE = 0.18


@dataclass
class SynthBundle:
    profile: str
    seed: int
    site: SiteConfig
    telemetry: list[TelemetryRecord]
    irradiance: list[IrradianceRecord]
    truth_pv_potential: HourlyTimeSeries
    truth_load: HourlyTimeSeries


def _market_site() -> SiteConfig:
    return SiteConfig(
        latitude_deg=6.45, longitude_deg=3.4,
        panel_tilt_deg=10.0, panel_azimuth_deg=180.0,
        pv_peak_w=9750.0,
        battery=BatterySpec(capacity_wh=10_000.0),
        eff=EfficiencyChain.from_roundtrip(0.90),
        timezone_offset_h=1,
    )


def _single_peak_site() -> SiteConfig:
    return SiteConfig(
        latitude_deg=0.0, longitude_deg=0.0,
        panel_tilt_deg=0.0, panel_azimuth_deg=180.0,
        pv_peak_w=9750.0,
        battery=BatterySpec(capacity_wh=10_000.0, roundtrip_eff=1.0),
        eff=EfficiencyChain(1.0, 1.0, 1.0, 1.0),
        timezone_offset_h=0,
    )


def _market_truth(site, shape, rng, days, start_day, annual_load_wh):
    """Hourly truth series for market-style profiles."""
    tz = timedelta(hours=site.timezone_offset_h)
    start_utc = datetime.combine(start_day, datetime.min.time(),
                                 tzinfo=timezone.utc) - tz
    n = days * 24
    shape_sum = float(shape.sum())
    weekday_weight = 6.0 + _SUNDAY_SCALE  # Mon-Sat full, Sunday scaled
    daily_base = annual_load_wh / (365.0 * weekday_weight / 7.0)

    # day-level draws
    load_factor = 1.0 + 0.10 * rng.standard_normal(days)
    clearness = np.clip(0.62 + 0.12 * rng.standard_normal(days), 0.15, 0.80)
    forecast_err = 1.0 + 0.08 * rng.standard_normal(days)
    ghi_jitter = np.clip(1.0 + 0.03 * rng.standard_normal(n), 0.0, None)

    load = np.zeros(n)
    ghi = np.zeros(n)
    ghi_fc = np.zeros(n)
    peak = site.pv_peak_w
    potential = np.zeros(n)
    for i in range(n):
        d, h = divmod(i, 24)
        local_day = start_day + timedelta(days=d)
        scale = _SUNDAY_SCALE if local_day.weekday() == 6 else 1.0
        load[i] = daily_base * scale * max(0.0, load_factor[d]) * shape[h] / shape_sum

        midpoint = start_utc + HOUR * i + timedelta(minutes=30)
        sun = sun_position(site, midpoint)
        if sun.zenith_deg < 90.0:
            i0h = 1367.0 * (1.0 + 0.033 * np.cos(2 * np.pi * sun.day_of_year / 365.0))
            i0h *= np.cos(np.radians(sun.zenith_deg))
            ghi[i] = clearness[d] * i0h * ghi_jitter[i]
            ghi_fc[i] = max(0.0, ghi[i] * forecast_err[d])
            poa = project_to_poa(ghi[i], sun, site)
            potential[i] = min(peak, peak * poa / 1000.0)

    return (start_utc,
            HourlyTimeSeries(start_utc, potential, SeriesKind.ENERGY_WH),
            HourlyTimeSeries(start_utc, load, SeriesKind.ENERGY_WH),
            ghi, ghi_fc)


def _single_peak_truth(site, days, start_day):
    start_utc = datetime.combine(start_day, datetime.min.time(), tzinfo=timezone.utc)
    n = days * 24
    # Flat within-day surplus plateau whose height varies deterministically
    # across days (a slow sine); the variation leaves one partially-charged
    # morning hour per day, which gives the power regression non-degenerate
    # noiseless training pairs. The evening block discharges 37.5% of the
    # battery, so caps stay unclamped for buffers up to 62.5%.
    level = 3000.0 * (1.0 + 0.1 * np.sin(2.0 * np.pi * np.arange(days) / 29.0))
    potential = np.zeros(n)
    load = np.zeros(n)
    for d in range(days):
        potential[d * 24 + 7: d * 24 + 15] = level[d]
        load[d * 24 + 15: d * 24 + 20] = 750.0
    # horizontal panel: GHI maps back through the exact peak/1000 slope
    ghi = potential * 1000.0 / site.pv_peak_w
    return (start_utc,
            HourlyTimeSeries(start_utc, potential, SeriesKind.ENERGY_WH),
            HourlyTimeSeries(start_utc, load, SeriesKind.ENERGY_WH),
            ghi, ghi.copy())


def generate(profile: str, seed: int = 0, days: int = 365,
             start_day: date = date(2019, 1, 1),
             load_scale: float = 1.0) -> SynthBundle:
    """Build one synthetic system: truth series plus greedy-operation
    telemetry and a paired irradiance file (analysis + day-ahead rows)."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}, expected one of {PROFILES}")
    rng = np.random.default_rng(seed)

    if profile == "single_peak":
        site = _single_peak_site()
        start_utc, potential, load, ghi, ghi_fc = _single_peak_truth(site, days, start_day)
        meter_noise = np.ones(days * 24)
    else:
        site = _market_site()
        annual = 3.6e6 * load_scale * (2.2 if profile == "high_load" else 1.0)
        shape = _HIGH_LOAD_SHAPE if profile == "high_load" else _MARKET_SHAPE
        start_utc, potential, load, ghi, ghi_fc = _market_truth(
            site, shape, rng, days, start_day, annual)
        meter_noise = np.clip(1.0 + 0.01 * rng.standard_normal(days * 24), 0.0, None)

    # telemetry reflects historical (greedy) operation of the truth
    result = run_scenario(ScenarioInputs(potential, load), site, strategy="greedy")
    telemetry = []
    for i, flow in enumerate(result.flows):
        ts = start_utc + HOUR * i
        generated = flow.pv_direct_wh + flow.batt_charge_wh / site.eff.pv_to_battery
        pv_metered = min(site.pv_peak_w, generated * meter_noise[i])
        served = load.values[i] - flow.unserved_wh
        telemetry.append(TelemetryRecord(ts, pv_metered, served, flow.soc_end_pct))

    irradiance = []
    for i in range(days * 24):
        ts = start_utc + HOUR * i
        irradiance.append(IrradianceRecord(ts, float(ghi[i]),
                                           IrradianceSource.HISTORICAL_ANALYSIS))
        irradiance.append(IrradianceRecord(ts, float(ghi_fc[i]),
                                           IrradianceSource.FORECAST_DAY_AHEAD))

    return SynthBundle(profile, seed, site, telemetry, irradiance, potential, load)


def site_to_dict(site: SiteConfig) -> dict:
    return {
        "latitude_deg": site.latitude_deg,
        "longitude_deg": site.longitude_deg,
        "panel_tilt_deg": site.panel_tilt_deg,
        "panel_azimuth_deg": site.panel_azimuth_deg,
        "pv_peak_w": site.pv_peak_w,
        "timezone_offset_h": site.timezone_offset_h,
        "battery": {
            "capacity_wh": site.battery.capacity_wh,
            "soc_hard_min_pct": site.battery.soc_hard_min_pct,
            "roundtrip_eff": site.battery.roundtrip_eff,
            "max_charge_w": site.battery.max_charge_w,
            "max_discharge_w": site.battery.max_discharge_w,
        },
        "efficiency": {
            "mppt_eff": site.eff.mppt_eff,
            "inverter_eff": site.eff.inverter_eff,
            "batt_charge_eff": site.eff.batt_charge_eff,
            "batt_discharge_eff": site.eff.batt_discharge_eff,
        },
    }


def site_from_dict(doc: dict) -> SiteConfig:
    batt = doc.get("battery", {})
    eff_doc = doc.get("efficiency", {})
    if eff_doc:
        eff = EfficiencyChain(
            eff_doc.get("mppt_eff", 0.98),
            eff_doc.get("inverter_eff", 0.943),
            eff_doc.get("batt_charge_eff", np.sqrt(batt.get("roundtrip_eff", 0.90))),
            eff_doc.get("batt_discharge_eff", np.sqrt(batt.get("roundtrip_eff", 0.90))),
        )
    else:
        eff = EfficiencyChain.from_roundtrip(batt.get("roundtrip_eff", 0.90))
    return SiteConfig(
        latitude_deg=doc["latitude_deg"],
        longitude_deg=doc["longitude_deg"],
        panel_tilt_deg=doc["panel_tilt_deg"],
        panel_azimuth_deg=doc["panel_azimuth_deg"],
        pv_peak_w=doc["pv_peak_w"],
        battery=BatterySpec(
            capacity_wh=batt["capacity_wh"],
            soc_hard_min_pct=batt.get("soc_hard_min_pct", 20.0),
            roundtrip_eff=batt.get("roundtrip_eff", 0.90),
            max_charge_w=batt.get("max_charge_w"),
            max_discharge_w=batt.get("max_discharge_w"),
        ),
        eff=eff,
        timezone_offset_h=doc.get("timezone_offset_h", 0),
    )


def write_fixture(bundle: SynthBundle, out_dir) -> dict[str, Path]:
    """Write telemetry, irradiance and a ready-to-run config file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    telemetry_path = out_dir / "telemetry.csv"
    irradiance_path = out_dir / "irradiance.csv"
    config_path = out_dir / "config.json"

    write_telemetry_csv(bundle.telemetry, telemetry_path)
    write_irradiance_csv(bundle.irradiance, irradiance_path)
    config = {
        "site": site_to_dict(bundle.site),
        "strategy": {
            "soc_low_limit_pct": 65.0,
            "eta_charge": bundle.site.eff.pv_to_battery,
        },
        "forecast": {"k_max": 7, "z": 1.96, "curtail_soc_threshold_pct": 99.9},
        "paths": {
            "telemetry_csv": str(telemetry_path),
            "irradiance_csv": str(irradiance_path),
            "out_dir": str(out_dir / "results"),
        },
        "seed": bundle.seed,
        "profile": bundle.profile,
    }
    config_path.write_text(json.dumps(config, indent=2))
    return {"telemetry": telemetry_path, "irradiance": irradiance_path,
            "config": config_path}
