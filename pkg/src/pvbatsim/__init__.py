"""Forecast-based charging strategy toolkit for standalone PV-battery systems.

The package simulates hourly operation of an off-grid PV-battery system
under either the conventional greedy charging strategy or a forecast-based
strategy that delays charging and caps the state of charge, keeping the
battery low to slow calendar aging while safeguarding against outages.
"""

from .core import (BatterySpec, EfficiencyChain, HourlyForecast, HourlyTimeSeries,
                   SeriesKind, SiteConfig, SocDeltaTriplet, delta_soc,
                   delta_soc_triplet, soc_after)
from .analysis import (KpiReport, SweepResult, SweepRow, compute_kpis,
                       default_sweep_limits, emit_plot_data, emit_report,
                       fan_chart_percentiles, sweep_soc_low_limit)
from .simulator import (FittedProvider, OracleProvider, ScenarioInputs,
                        ScenarioResult, SimState, StepInput, StepResult,
                        oracle_forecasts, reconstruct_potential_pv, run_scenario,
                        step)
from .strategy import (ChargeCommand, ChargeMode, DaySetpoints, PeriodBoundaries,
                       StrategyParams, decide, detect_periods, greedy_decision,
                       plan)
from .synth import SynthBundle, generate, write_fixture

__version__ = "0.1.0"

__all__ = [
    "BatterySpec", "ChargeCommand", "ChargeMode", "DaySetpoints",
    "EfficiencyChain", "FittedProvider", "HourlyForecast", "HourlyTimeSeries",
    "KpiReport", "OracleProvider", "PeriodBoundaries", "ScenarioInputs",
    "ScenarioResult", "SeriesKind", "SimState", "SiteConfig", "SocDeltaTriplet",
    "StepInput", "StepResult", "StrategyParams", "SweepResult", "SweepRow",
    "SynthBundle", "compute_kpis", "decide", "default_sweep_limits", "delta_soc",
    "delta_soc_triplet", "detect_periods", "emit_plot_data", "emit_report",
    "fan_chart_percentiles", "generate", "greedy_decision", "oracle_forecasts",
    "plan", "reconstruct_potential_pv", "run_scenario", "soc_after", "step",
    "sweep_soc_low_limit", "write_fixture",
]
