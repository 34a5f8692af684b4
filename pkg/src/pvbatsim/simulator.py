"""Hourly energy-balance engine replaying a span under a charging strategy.

DC-coupled topology: panels feed an MPPT onto the DC bus, the battery hangs
on the bus, and a single inverter serves the AC load. Per hour the order of
resolution is: serve load directly from PV, cover any deficit from the
battery down to the hard floor (unmet demand below the floor is an outage
hour), charge the battery from PV surplus up to the commanded SOC cap, and
curtail the rest. SOC equals state of energy; all efficiencies are static.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .core import (HOUR, HourlyForecast, HourlyTimeSeries, SeriesKind, SiteConfig,
                   soc_after)
from .errors import SeriesMisaligned
from .forecast_load import LoadForecaster, forecast_load_24h
from .forecast_pv import RegressionModel, forecast_pv_24h, project_to_poa, sun_position
from .strategy import (ChargeCommand, ChargeMode, DaySetpoints, PlanInputs,
                       StrategyParams, decide, finish_plan, greedy_decision,
                       prepare_plan)

_UNSERVED_EPS_WH = 1e-9


@dataclass
class SimState:
    t: datetime
    soc_pct: float
    latched_charge: bool = False
    served_wh: float = 0.0
    curtailed_wh: float = 0.0
    unserved_wh: float = 0.0
    outage_hours: int = 0


@dataclass
class StepInput:
    pv_potential_wh: float   # available DC energy, pre-curtailment, post-panel
    load_wh: float           # AC demand

    def __post_init__(self):
        if self.pv_potential_wh < 0 or self.load_wh < 0:
            raise ValueError("step inputs must be >= 0")


@dataclass
class StepResult:
    pv_direct_wh: float        # DC energy routed to the direct path
    batt_charge_wh: float      # energy into the store, at the terminals
    batt_discharge_wh: float   # energy out of the store, at the terminals
    curtailed_wh: float        # DC energy thrown away
    unserved_wh: float         # AC demand left unmet
    soc_end_pct: float


def step(state: SimState, inp: StepInput, cmd: ChargeCommand,
         site: SiteConfig) -> StepResult:
    """Advance one hour; mutates the state clock, SOC and counters."""
    eff = site.eff
    batt = site.battery
    soc = state.soc_pct

    # 1) serve load directly from PV
    need_dc = inp.load_wh / eff.pv_to_load
    pv_direct = min(inp.pv_potential_wh, need_dc)
    served_direct = pv_direct * eff.pv_to_load
    deficit = max(0.0, inp.load_wh - served_direct)

    # 2) discharge the battery down to the hard floor
    discharge = 0.0
    if deficit > 0.0:
        available = max(0.0, (soc - batt.soc_hard_min_pct) / 100.0 * batt.capacity_wh)
        wanted = deficit / eff.battery_to_load
        discharge = min(wanted, available)
        if batt.max_discharge_w is not None:
            discharge = min(discharge, batt.max_discharge_w * 1.0)
        deficit -= discharge * eff.battery_to_load

    # 3) unmet demand at the floor is an outage hour
    unserved = deficit if deficit > _UNSERVED_EPS_WH else 0.0
    if unserved > 0.0:
        state.outage_hours += 1

    # 4) charge from surplus up to the commanded cap
    soc_mid = soc - 100.0 * discharge / batt.capacity_wh
    surplus = inp.pv_potential_wh - pv_direct
    charge = 0.0
    if surplus > 0.0:
        headroom = max(0.0, (cmd.soc_cap_pct - soc_mid) / 100.0 * batt.capacity_wh)
        charge = min(surplus * eff.pv_to_battery, headroom)
        if batt.max_charge_w is not None:
            charge = min(charge, batt.max_charge_w * 1.0)

    # 5) the rest is curtailed
    pv_to_charge = charge / eff.pv_to_battery
    curtailed = max(0.0, surplus - pv_to_charge)

    soc_end = soc_after(soc, charge - discharge, batt)
    state.soc_pct = soc_end
    state.t = state.t + HOUR
    state.served_wh += inp.load_wh - unserved
    state.curtailed_wh += curtailed
    state.unserved_wh += unserved
    return StepResult(pv_direct, charge, discharge, curtailed, unserved, soc_end)


# ---------------------------------------------------------------------------
# Forecast providers
# ---------------------------------------------------------------------------

def oracle_forecasts(load_truth: HourlyTimeSeries, pv_truth: HourlyTimeSeries,
                     t_p: datetime) -> tuple[HourlyForecast, HourlyForecast]:
    """Perfect-forecast pair for the 24 hours from t_p: the truth itself with
    zero interval width. Hours beyond the truth span are zero."""
    def window(series):
        vals = np.zeros(24)
        offset = int((t_p - series.start) / HOUR)
        for h in range(24):
            i = offset + h
            if 0 <= i < len(series.values):
                vals[h] = series.values[i]
        return HourlyForecast(t_p, vals.copy(), vals.copy(), vals.copy())
    return window(load_truth), window(pv_truth)


class OracleProvider:
    """Serves zero-width forecasts sliced from the truth series."""

    def __init__(self, load_truth: HourlyTimeSeries, pv_truth: HourlyTimeSeries):
        self.load_truth = load_truth
        self.pv_truth = pv_truth

    def forecasts_at(self, t_p: datetime):
        return oracle_forecasts(self.load_truth, self.pv_truth, t_p)


class FittedProvider:
    """Serves fitted day-ahead forecasts, stitched onto the rolling horizon.

    Whole-day forecasts are computed once per local calendar day and cached;
    each processing hour sees the tail of the current day plus the head of
    the next. Days without a GHI forecast fall back to zero PV.
    """

    def __init__(self, load_forecaster: LoadForecaster, pv_model: RegressionModel,
                 ghi_forecast_by_day: dict, site: SiteConfig, z: float = 1.96):
        self.load_forecaster = load_forecaster
        self.pv_model = pv_model
        self.ghi_by_day = ghi_forecast_by_day
        self.site = site
        self.z = z
        self._cache: dict[date, tuple] = {}

    def _day_pair(self, local_day: date):
        if local_day in self._cache:
            return self._cache[local_day]
        load_fc = forecast_load_24h(self.load_forecaster, local_day, self.z)
        records = self.ghi_by_day.get(local_day)
        if records is None:
            zeros = np.zeros(24)
            pv_fc = HourlyForecast(load_fc.start, zeros, zeros.copy(), zeros.copy())
        else:
            pv_fc = forecast_pv_24h(self.pv_model, records, self.site, self.z)
        pair = (load_fc, pv_fc)
        self._cache[local_day] = pair
        return pair

    def forecasts_at(self, t_p: datetime):
        local = t_p + timedelta(hours=self.load_forecaster.tz_offset_h)
        d0, h0 = local.date(), local.hour
        load0, pv0 = self._day_pair(d0)
        load1, pv1 = self._day_pair(d0 + timedelta(days=1))

        def stitch(a, b):
            return HourlyForecast(
                t_p,
                np.concatenate([a.low[h0:], b.low[:h0]]),
                np.concatenate([a.exp[h0:], b.exp[:h0]]),
                np.concatenate([a.up[h0:], b.up[:h0]]),
            )
        return stitch(load0, load1), stitch(pv0, pv1)


# ---------------------------------------------------------------------------
# Scenario runner
# ---------------------------------------------------------------------------

@dataclass
class ScenarioInputs:
    pv_potential: HourlyTimeSeries
    load: HourlyTimeSeries
    initial_soc_pct: float | None = None

    def __post_init__(self):
        if (self.pv_potential.start != self.load.start
                or len(self.pv_potential) != len(self.load)):
            raise SeriesMisaligned("PV and load series must share start and length")


@dataclass
class SetpointLogRow:
    t_p: datetime
    soc_now: float
    soc_low_goal: float
    soc_up_limit: float
    t_start_charge: datetime
    t_sd: datetime
    t_ed: datetime
    mode: str


@dataclass
class ScenarioResult:
    trajectory: HourlyTimeSeries     # SOC at the end of each hour
    flows: list[StepResult]
    setpoints: list[SetpointLogRow]
    state: SimState


def build_plan_cache(inputs: ScenarioInputs, provider, params: StrategyParams) -> list[PlanInputs]:
    """Precompute the buffer-independent planning inputs for every hour.

    A sweep over security-buffer values replays the same forecasts, so this
    list can be shared across all its runs.
    """
    start = inputs.load.start
    cache = []
    for i in range(len(inputs.load)):
        load_fc, pv_fc = provider.forecasts_at(start + HOUR * i)
        cache.append(prepare_plan(pv_fc, load_fc, params))
    return cache


def run_scenario(inputs: ScenarioInputs, site: SiteConfig, strategy: str = "greedy",
                 params: StrategyParams | None = None, provider=None,
                 plan_cache: list[PlanInputs] | None = None,
                 collect_setpoints: bool = True) -> ScenarioResult:
    """Replay the input span hour by hour under one strategy.

    ``strategy`` is "greedy" or "forecast"; the latter needs StrategyParams
    and either a forecast provider or a prebuilt plan cache. Deterministic:
    identical inputs give bit-identical trajectories.
    """
    if strategy not in ("greedy", "forecast"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "forecast":
        if params is None:
            raise ValueError("forecast strategy needs StrategyParams")
        if provider is None and plan_cache is None:
            raise ValueError("forecast strategy needs a provider or a plan cache")

    n = len(inputs.load)
    start = inputs.load.start
    soc0 = 100.0 if inputs.initial_soc_pct is None else inputs.initial_soc_pct
    state = SimState(t=start, soc_pct=soc0)
    pv_vals = inputs.pv_potential.values
    load_vals = inputs.load.values

    flows: list[StepResult] = []
    soc_out = np.empty(n)
    setpoints: list[SetpointLogRow] = []
    latched = False
    latched_until = -1

    for i in range(n):
        if strategy == "greedy":
            cmd = greedy_decision(state.soc_pct)
        else:
            if plan_cache is not None:
                pi = plan_cache[i]
            else:
                load_fc, pv_fc = provider.forecasts_at(start + HOUR * i)
                pi = prepare_plan(pv_fc, load_fc, params)
            sets = finish_plan(pi, params, state.soc_pct)
            if latched and i >= latched_until:
                latched = False
            if not latched and sets.start_now:
                latched = True
                latched_until = i + sets.periods.t_ec
            state.latched_charge = latched
            cmd = decide(state.soc_pct, sets, params, latched)
            if collect_setpoints:
                t_p = start + HOUR * i
                setpoints.append(SetpointLogRow(
                    t_p, state.soc_pct, sets.soc_low_goal_pct, sets.soc_up_limit_pct,
                    t_p + HOUR * sets.t_start_charge,
                    t_p + HOUR * sets.periods.t_sd, t_p + HOUR * sets.periods.t_ed,
                    cmd.mode.value))
        res = step(state, StepInput(float(pv_vals[i]), float(load_vals[i])), cmd, site)
        flows.append(res)
        soc_out[i] = res.soc_end_pct

    trajectory = HourlyTimeSeries(start, soc_out, SeriesKind.SOC_PCT)
    return ScenarioResult(trajectory, flows, setpoints, state)


def reconstruct_potential_pv(ghi_series: HourlyTimeSeries, model: RegressionModel,
                             site: SiteConfig) -> HourlyTimeSeries:
    """Potential (uncurtailed) PV energy from historical GHI through the
    fitted plant model, clamped into [0, pv_peak]."""
    peak_wh = site.pv_peak_w * 1.0
    values = np.zeros(len(ghi_series))
    for i in range(len(ghi_series)):
        midpoint = ghi_series.start + HOUR * i + timedelta(minutes=30)
        sun = sun_position(site, midpoint)
        if sun.zenith_deg >= 90.0:
            continue
        poa = project_to_poa(float(ghi_series.values[i]), sun, site)
        values[i] = min(peak_wh, max(0.0, model.slope * poa + model.intercept))
    return HourlyTimeSeries(ghi_series.start, values, SeriesKind.ENERGY_WH)


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------

def write_trajectory_csv(result: ScenarioResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "soc_pct", "pv_direct_wh", "batt_charge_wh",
                         "batt_discharge_wh", "curtailed_wh", "unserved_wh"])
        start = result.trajectory.start
        for i, res in enumerate(result.flows):
            ts = (start + HOUR * i).strftime("%Y-%m-%dT%H:%M:%SZ")
            writer.writerow([ts, f"{res.soc_end_pct:.6f}", f"{res.pv_direct_wh:.3f}",
                             f"{res.batt_charge_wh:.3f}", f"{res.batt_discharge_wh:.3f}",
                             f"{res.curtailed_wh:.3f}", f"{res.unserved_wh:.3f}"])


def write_setpoint_log(rows: list[SetpointLogRow], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_p", "soc_now", "soc_low_goal", "soc_up_limit",
                         "t_start_charge", "t_sd", "t_ed", "mode"])
        for r in rows:
            writer.writerow([
                r.t_p.strftime("%Y-%m-%dT%H:%M:%SZ"), f"{r.soc_now:.4f}",
                f"{r.soc_low_goal:.4f}", f"{r.soc_up_limit:.4f}",
                r.t_start_charge.strftime("%Y-%m-%dT%H:%M:%SZ"),
                r.t_sd.strftime("%Y-%m-%dT%H:%M:%SZ"),
                r.t_ed.strftime("%Y-%m-%dT%H:%M:%SZ"), r.mode])
