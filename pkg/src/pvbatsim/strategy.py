"""The forecast-based charging strategy and the greedy baseline.

Given a 24-hour PV and consumption forecast from the current processing
hour, the planner detects the charge and discharge periods, computes the
three setpoints (planned daily SOC minimum, upper charging cap, delayed
charge start) and the per-hour command:

* hold: surplus is curtailed at the current SOC, load is still served;
* charge from surplus up to the cap, once starting is necessary to reach the
  cap by the end of the charge window even in the pessimistic forecast;
* safeguard: whenever SOC is below the security buffer, charge with any
  surplus toward full regardless of the delay.

Period boundaries are hour offsets 0..24 relative to the processing hour;
windows are half-open, so hours [t_sc, t_ec) are the charge window.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import HourlyForecast, SocDeltaTriplet, delta_soc_triplet

EPS_SOC_RATE_PCT_PER_H = 0.1  # dead-band for period detection
# The planner lands exactly on the security buffer by construction, so the
# safeguard comparison needs a tolerance above float noise (1e-9 of a percent
# is 1e-7 Wh on a 10 kWh battery, far below any physical resolution).
SAFEGUARD_TOLERANCE_PCT = 1e-9


@dataclass
class StrategyParams:
    soc_low_limit_pct: float   # adjustable security buffer
    e_batt_wh: float
    eta_charge: float

    def __post_init__(self):
        if not 0 <= self.soc_low_limit_pct <= 100:
            raise ValueError("soc_low_limit_pct must lie in [0, 100]")
        if self.e_batt_wh <= 0 or self.eta_charge <= 0:
            raise ValueError("e_batt_wh and eta_charge must be positive")


@dataclass
class PeriodBoundaries:
    """Hour offsets within the 24 h horizon; charge window [t_sc, t_ec),
    next discharge window [t_sd, t_ed), with t_sd == t_ec."""

    t_sc: int
    t_ec: int
    t_sd: int
    t_ed: int

    def __post_init__(self):
        if not (0 <= self.t_sc <= self.t_ec <= self.t_sd <= self.t_ed <= 24):
            raise ValueError("period boundaries must be ordered within the horizon")
        if self.t_ec != self.t_sd:
            raise ValueError("discharge window must start where charging ends")


class ChargeMode(Enum):
    CHARGE_FROM_SURPLUS = "charge_from_surplus"
    HOLD_CURTAIL_ABOVE_CAP = "hold_curtail_above_cap"
    SAFEGUARD_CHARGE = "safeguard_charge"


@dataclass
class ChargeCommand:
    mode: ChargeMode
    soc_cap_pct: float

    def __post_init__(self):
        if not 0 <= self.soc_cap_pct <= 100:
            raise ValueError("soc_cap_pct must lie in [0, 100]")


@dataclass
class DaySetpoints:
    soc_low_goal_pct: float
    soc_up_limit_pct: float
    t_start_charge: int        # hour offset 0..24; 24 means "not this window"
    periods: PeriodBoundaries
    start_now: bool            # charge-start condition already true this hour

    def __post_init__(self):
        if not self.soc_low_goal_pct <= self.soc_up_limit_pct + 1e-9:
            raise ValueError("setpoints must satisfy goal <= cap")


@dataclass
class PlanInputs:
    """Forecast-derived quantities that do not depend on the security buffer;
    one instance per processing hour can be shared across a parameter sweep."""

    periods: PeriodBoundaries
    discharge_delta: SocDeltaTriplet       # over [t_sd, t_ed)
    charge_low_suffix: np.ndarray          # pessimistic dSOC sums [h, t_ec), len t_ec+1


def detect_periods(pv_fc: HourlyForecast, load_fc: HourlyForecast,
                   params: StrategyParams,
                   eps_pct_per_h: float = EPS_SOC_RATE_PCT_PER_H) -> PeriodBoundaries:
    """Charge/discharge windows from the sign runs of the expected SOC rate.

    The charge window is the surplus run containing the strongest hour; the
    discharge window starts there and ends with the following deficit run.
    Hours inside the dead-band (for instance consumption-free nights) extend
    neither period. With no surplus run the whole horizon is discharge.
    """
    rate = (pv_fc.exp * params.eta_charge - load_fc.exp) * (100.0 / params.e_batt_wh)

    surplus_runs = []
    run_start = None
    for h in range(25):
        active = h < 24 and rate[h] > eps_pct_per_h
        if active and run_start is None:
            run_start = h
        elif not active and run_start is not None:
            surplus_runs.append((run_start, h))
            run_start = None
    if not surplus_runs:
        return PeriodBoundaries(0, 0, 0, 24)

    peak_hour = int(np.argmax(rate))
    charge_run = next(((a, b) for a, b in surplus_runs if a <= peak_hour < b),
                      max(surplus_runs, key=lambda ab: rate[ab[0]:ab[1]].max()))
    t_sc, t_ec = charge_run

    t_ed = t_ec
    h = t_ec
    while h < 24 and rate[h] >= -eps_pct_per_h:
        h += 1
    if h < 24:
        # first deficit run after the charge window
        while h < 24 and rate[h] < -eps_pct_per_h:
            h += 1
        t_ed = h
    return PeriodBoundaries(t_sc, t_ec, t_ec, t_ed)


def compute_soc_low_goal(params: StrategyParams,
                         dsoc_discharge: SocDeltaTriplet) -> float:
    """Planned daily SOC minimum: the security buffer plus the spread between
    the expected and the pessimistic discharge forecast."""
    raw = params.soc_low_limit_pct + dsoc_discharge.exp - dsoc_discharge.low
    return min(100.0, max(params.soc_low_limit_pct, raw))


def compute_soc_up_limit(soc_low_goal: float, dsoc_exp_discharge: float) -> float:
    """Upper charging cap: the goal plus the magnitude of the expected
    discharge, so the median scenario lands on the goal at window end."""
    if dsoc_exp_discharge > 0:
        raise ValueError("expected discharge delta must be <= 0")
    return min(100.0, max(soc_low_goal, soc_low_goal - dsoc_exp_discharge))


def should_start_charging(soc_now: float, soc_up_limit: float,
                          dsoc_low_remaining_charge: float) -> bool:
    """True once the pessimistic charge still available in the remaining
    window no longer overshoots the cap; waiting longer would risk missing
    it. False when the cap is already reached."""
    if soc_now >= soc_up_limit:
        return False
    return soc_up_limit >= soc_now + dsoc_low_remaining_charge


def prepare_plan(pv_fc: HourlyForecast, load_fc: HourlyForecast,
                 params: StrategyParams,
                 eps_pct_per_h: float = EPS_SOC_RATE_PCT_PER_H) -> PlanInputs:
    """Everything the planner derives from the forecasts alone.

    Only the battery size and charge efficiency enter here, not the security
    buffer, so a sweep over buffer values can reuse one instance per hour.
    """
    periods = detect_periods(pv_fc, load_fc, params, eps_pct_per_h)
    pv_sums = pv_fc.window_sums(periods.t_sd, periods.t_ed)
    cons_sums = load_fc.window_sums(periods.t_sd, periods.t_ed)
    discharge_delta = delta_soc_triplet(pv_sums, cons_sums,
                                        params.eta_charge, params.e_batt_wh)

    scale = 100.0 / params.e_batt_wh
    hourly_low = (pv_fc.low * params.eta_charge - load_fc.up) * scale
    t_ec = periods.t_ec
    suffix = np.zeros(t_ec + 1)
    if t_ec > 0:
        suffix[:t_ec] = np.cumsum(hourly_low[:t_ec][::-1])[::-1]
    return PlanInputs(periods, discharge_delta, suffix)


def finish_plan(inputs: PlanInputs, params: StrategyParams, soc_now: float) -> DaySetpoints:
    goal = compute_soc_low_goal(params, inputs.discharge_delta)
    if inputs.periods.t_ec > inputs.periods.t_sc:
        # dead-band hours can push the window sum marginally positive
        cap = compute_soc_up_limit(goal, min(0.0, inputs.discharge_delta.exp))
    else:
        cap = goal  # no charge window, the cap is moot
    suffix = inputs.charge_low_suffix
    t_ec = len(suffix) - 1
    # Latest start that still reaches the cap: charging in hour h becomes
    # necessary once the pessimistic charge left after h would fall short.
    # Deciding on the post-h remainder keeps the quantized landing exact,
    # because any overshoot within hour h is clipped at the cap.
    need = cap - soc_now
    t_start = t_ec
    if need > SAFEGUARD_TOLERANCE_PCT:
        for h in range(t_ec):
            if suffix[h + 1] < need:
                t_start = h
                break
        start_now = t_start == 0 and t_ec > 0
    else:
        start_now = False
    return DaySetpoints(goal, cap, t_start, inputs.periods, start_now)


def plan(load_fc: HourlyForecast, pv_fc: HourlyForecast, params: StrategyParams,
         soc_now: float,
         eps_pct_per_h: float = EPS_SOC_RATE_PCT_PER_H) -> DaySetpoints:
    """Full per-hour planning pass: periods, setpoints, charge start."""
    return finish_plan(prepare_plan(pv_fc, load_fc, params, eps_pct_per_h),
                       params, soc_now)


def decide(soc_now: float, setpoints: DaySetpoints, params: StrategyParams,
           latched: bool = False) -> ChargeCommand:
    """Per-hour command. The safeguard overrides the delay whenever SOC is
    below the security buffer; otherwise charging runs once the start
    condition has latched (callers hold the latch) or is true right now."""
    if soc_now < params.soc_low_limit_pct - SAFEGUARD_TOLERANCE_PCT:
        return ChargeCommand(ChargeMode.SAFEGUARD_CHARGE, 100.0)
    if latched or setpoints.start_now:
        return ChargeCommand(ChargeMode.CHARGE_FROM_SURPLUS, setpoints.soc_up_limit_pct)
    return ChargeCommand(ChargeMode.HOLD_CURTAIL_ABOVE_CAP, min(100.0, soc_now))


def greedy_decision(soc_now: float) -> ChargeCommand:
    """Conventional operation: charge with any surplus, up to full."""
    return ChargeCommand(ChargeMode.CHARGE_FROM_SURPLUS, 100.0)
