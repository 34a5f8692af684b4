#!/usr/bin/env python3
# Fit the consumption and PV forecasters on a year of synthetic market
# telemetry and inspect one day-ahead forecast against the realized day.
#
# Consumption: weekdays cluster apart from the nearly-closed Sundays
# (k-means on daily totals, silhouette-selected k), and an ARIMA model
# extrapolates each cluster's daily energy level. PV: horizontal irradiance
# is projected onto the panel plane and mapped to power by a regression
# trained on non-curtailed hours only.

from datetime import date

import numpy as np

from pvbatsim.forecast_load import fit_load_forecaster, forecast_load_24h
from pvbatsim.forecast_pv import fit_power_regression, forecast_pv_24h, poa_series
from pvbatsim.core import HourlyTimeSeries, SeriesKind
from pvbatsim.synth import generate

bundle = generate("market_like", seed=7, days=365)
site = bundle.site

cons = HourlyTimeSeries(bundle.truth_load.start,
                        [t.cons_energy_wh for t in bundle.telemetry],
                        SeriesKind.ENERGY_WH)
forecaster = fit_load_forecaster(cons, seed=0, tz_offset_h=site.timezone_offset_h)
print(f"clusters: k={forecaster.clusters.k}, weekday map "
      f"{forecaster.clusters.weekday_to_cluster}")
for c, model in forecaster.level_models.items():
    print(f"  cluster {c}: centroid {forecaster.clusters.centroids[c] / 1000:.1f} kWh/day, "
          f"ARIMA{model.order}, sigma {model.residual_std / 1000:.2f} kWh")

# PV regression on analysis irradiance vs metered generation, skipping
# full-battery hours where the real output was curtailed
analysis = [r for r in bundle.irradiance if r.source.value == "analysis"]
ghi = HourlyTimeSeries(bundle.truth_load.start,
                       [r.ghi_wh_per_m2 for r in analysis], SeriesKind.ENERGY_WH)
poa = poa_series(ghi, site)
metered = np.array([t.pv_energy_wh for t in bundle.telemetry])
soc = np.array([t.soc_pct for t in bundle.telemetry])
pv_model = fit_power_regression(poa, metered, curtailment_mask=soc >= 99.9)
print(f"\nPV regression: slope {pv_model.slope:.2f} Wh per Wh/m2, "
      f"intercept {pv_model.intercept:.0f} Wh, sigma {pv_model.residual_std:.0f} Wh "
      f"({pv_model.n_train} training hours)")

target = date(2019, 6, 12)
load_fc = forecast_load_24h(forecaster, target)

# the 24 day-ahead GHI rows covering the target local day
from datetime import datetime, timedelta, timezone
start_utc = datetime.combine(target, datetime.min.time(), tzinfo=timezone.utc) \
    - timedelta(hours=site.timezone_offset_h)
ghi_day = [r for r in bundle.irradiance
           if r.source.value == "forecast"
           and start_utc <= r.timestamp < start_utc + timedelta(hours=24)]
pv_fc = forecast_pv_24h(pv_model, ghi_day, site)

i0 = int((start_utc - bundle.truth_load.start).total_seconds() // 3600)
truth_load = bundle.truth_load.values[i0:i0 + 24]
truth_pv = bundle.truth_pv_potential.values[i0:i0 + 24]

print(f"\nday-ahead forecast for {target} (local hours):")
print("hour   load low/exp/up (Wh)    realized    pv exp (Wh)   potential")
for h in range(24):
    print(f"{h:4d}   {load_fc.low[h]:6.0f} {load_fc.exp[h]:6.0f} {load_fc.up[h]:6.0f}"
          f"   {truth_load[h]:9.0f}   {pv_fc.exp[h]:10.0f}   {truth_pv[h]:9.0f}")

inside = np.logical_and(load_fc.low.sum() <= truth_load.sum(),
                        truth_load.sum() <= load_fc.up.sum())
print(f"\nrealized daily energy {truth_load.sum() / 1000:.1f} kWh, forecast band "
      f"[{load_fc.low.sum() / 1000:.1f}, {load_fc.up.sum() / 1000:.1f}] kWh "
      f"-> {'inside' if inside else 'outside'}")
