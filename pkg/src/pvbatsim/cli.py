"""Command-line front end: ``simctl forecast|simulate|sweep|synth``.

Configuration is one JSON document (see README for the schema); flags
override config fields. Every command is deterministic given the config and
seed. Exit codes: 0 success, 2 config or validation error, 3 data error,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import analysis, simulator, synth
from .core import HOUR, HourlyTimeSeries, SeriesKind, SiteConfig
from .errors import PvBatSimError
from .forecast_load import (LoadForecaster, fit_load_forecaster, forecast_load_24h,
                            save_forecaster)
from .forecast_pv import (fit_power_regression, forecast_pv_24h, poa_series,
                          save_regression)
from .ingest import (GapPolicy, IrradianceSource, parse_irradiance_csv,
                     parse_telemetry_csv, to_hourly)
from .strategy import StrategyParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class ConfigError(PvBatSimError):
    pass


@dataclass
class RunConfig:
    site: SiteConfig
    soc_low_limit_pct: float
    eta_charge: float
    k_max: int
    z: float
    curtail_soc_threshold_pct: float
    telemetry_csv: Path
    irradiance_csv: Path
    out_dir: Path
    seed: int
    initial_soc_pct: float | None
    config_hash: str


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Load and validate the JSON run configuration.

    Referenced input files must exist; the seed is mandatory so reruns are
    reproducible.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    overrides = overrides or {}
    try:
        site = synth.site_from_dict(doc["site"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad site section ({exc})") from exc

    strategy_doc = doc.get("strategy", {})
    limit = overrides.get("limit", strategy_doc.get("soc_low_limit_pct", 65.0))
    eta = strategy_doc.get("eta_charge") or site.eff.pv_to_battery
    forecast_doc = doc.get("forecast", {})
    paths_doc = doc.get("paths", {})

    seed = overrides.get("seed", doc.get("seed"))
    if seed is None:
        raise ConfigError(f"{path}: a seed is required")

    try:
        telemetry_csv = Path(paths_doc["telemetry_csv"])
        irradiance_csv = Path(paths_doc["irradiance_csv"])
    except KeyError as exc:
        raise ConfigError(f"{path}: paths section needs {exc}") from exc
    for p in (telemetry_csv, irradiance_csv):
        if not p.exists():
            raise ConfigError(f"input file {p} does not exist")
    out_dir = Path(overrides.get("out") or paths_doc.get("out_dir", "results"))

    if not 0 <= float(limit) <= 100:
        raise ConfigError(f"soc_low_limit_pct {limit} outside [0, 100]")

    canonical = json.dumps(doc, sort_keys=True).encode()
    return RunConfig(
        site=site,
        soc_low_limit_pct=float(limit),
        eta_charge=float(eta),
        k_max=int(forecast_doc.get("k_max", 7)),
        z=float(forecast_doc.get("z", 1.96)),
        curtail_soc_threshold_pct=float(forecast_doc.get("curtail_soc_threshold_pct", 99.9)),
        telemetry_csv=telemetry_csv,
        irradiance_csv=irradiance_csv,
        out_dir=out_dir,
        seed=int(seed),
        initial_soc_pct=doc.get("simulation", {}).get("initial_soc_pct"),
        config_hash=hashlib.sha256(canonical).hexdigest()[:16],
    )


@dataclass
class Pipeline:
    """Parsed inputs and fitted models shared by the commands."""

    cfg: RunConfig
    pv_series: HourlyTimeSeries
    cons_series: HourlyTimeSeries
    soc_series: HourlyTimeSeries
    ghi_analysis: HourlyTimeSeries
    ghi_forecast_by_day: dict
    load_forecaster: LoadForecaster
    pv_model: object


def _group_forecast_ghi(records, tz_offset_h: int) -> dict:
    """Day-ahead GHI rows grouped into complete local days of 24 records."""
    by_day: dict[date, dict[int, object]] = {}
    offset = timedelta(hours=tz_offset_h)
    for rec in records:
        local = rec.timestamp + offset
        by_day.setdefault(local.date(), {})[local.hour] = rec
    complete = {}
    for day, hours in by_day.items():
        if len(hours) == 24:
            complete[day] = [hours[h] for h in range(24)]
    return complete


def build_pipeline(cfg: RunConfig) -> Pipeline:
    telemetry = parse_telemetry_csv(cfg.telemetry_csv)
    pv_series, cons_series, soc_series = to_hourly(telemetry, GapPolicy())

    irradiance = parse_irradiance_csv(cfg.irradiance_csv)
    analysis_records = [r for r in irradiance
                        if r.source is IrradianceSource.HISTORICAL_ANALYSIS]
    forecast_records = [r for r in irradiance
                        if r.source is IrradianceSource.FORECAST_DAY_AHEAD]
    ghi_analysis = to_hourly(analysis_records, GapPolicy())
    ghi_by_day = _group_forecast_ghi(forecast_records, cfg.site.timezone_offset_h)

    forecaster = fit_load_forecaster(cons_series, k_max=cfg.k_max, seed=cfg.seed,
                                     tz_offset_h=cfg.site.timezone_offset_h)

    # align GHI with telemetry for regression training
    n = min(len(ghi_analysis), len(pv_series))
    if ghi_analysis.start != pv_series.start:
        raise ConfigError("telemetry and irradiance series must share their start hour")
    poa = poa_series(ghi_analysis.slice_hours(0, n), cfg.site)
    curtailed = soc_series.values[:n] >= cfg.curtail_soc_threshold_pct
    pv_model = fit_power_regression(poa, pv_series.values[:n], curtailed)

    return Pipeline(cfg, pv_series, cons_series, soc_series, ghi_analysis,
                    ghi_by_day, forecaster, pv_model)


def _write_forecast_csv(path, fc):
    with Path(path).open("w", newline="") as fh:
        fh.write("timestamp,low_wh,exp_wh,up_wh\n")
        for i in range(24):
            ts = (fc.start + HOUR * i).strftime("%Y-%m-%dT%H:%M:%SZ")
            fh.write(f"{ts},{fc.low[i]:.3f},{fc.exp[i]:.3f},{fc.up[i]:.3f}\n")


def cmd_forecast(cfg: RunConfig, target: date) -> int:
    """Write day-ahead load and PV forecast CSVs; when the telemetry covers
    the target day, also report MAE/RMSE (PV errors only over non-curtailed
    sun-up hours, where real generation is comparable)."""
    pipe = build_pipeline(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    load_fc = forecast_load_24h(pipe.load_forecaster, target, cfg.z)
    ghi_records = pipe.ghi_forecast_by_day.get(target)
    if ghi_records is None:
        raise ConfigError(f"no day-ahead GHI forecast rows for {target}")
    pv_fc = forecast_pv_24h(pipe.pv_model, ghi_records, cfg.site, cfg.z)

    _write_forecast_csv(cfg.out_dir / "load_forecast.csv", load_fc)
    _write_forecast_csv(cfg.out_dir / "pv_forecast.csv", pv_fc)
    save_forecaster(pipe.load_forecaster, cfg.out_dir / "load_model.json")
    save_regression(pipe.pv_model, cfg.out_dir / "pv_model.json", cfg.site)

    report = {"date": target.isoformat(), "config_hash": cfg.config_hash,
              "seed": cfg.seed}
    try:
        i0 = pipe.cons_series.index_of(load_fc.start)
    except IndexError:
        i0 = None
    if i0 is not None and i0 + 24 <= len(pipe.cons_series):
        truth_load = pipe.cons_series.values[i0:i0 + 24]
        err = load_fc.exp - truth_load
        report["load_mae_wh"] = float(np.mean(np.abs(err)))
        report["load_rmse_wh"] = float(np.sqrt(np.mean(err ** 2)))

        truth_pv = pipe.pv_series.values[i0:i0 + 24]
        curtailed = pipe.soc_series.values[i0:i0 + 24] >= cfg.curtail_soc_threshold_pct
        comparable = (~curtailed) & (truth_pv > 0)
        if np.any(comparable):
            err_pv = pv_fc.exp[comparable] - truth_pv[comparable]
            report["pv_mae_wh"] = float(np.mean(np.abs(err_pv)))
            report["pv_rmse_wh"] = float(np.sqrt(np.mean(err_pv ** 2)))
            report["pv_hours_compared"] = int(np.count_nonzero(comparable))
    (cfg.out_dir / "forecast_report.json").write_text(json.dumps(report, indent=2))
    print(f"forecast for {target}: wrote load/pv forecast CSVs to {cfg.out_dir}")
    for key in ("load_mae_wh", "load_rmse_wh", "pv_mae_wh", "pv_rmse_wh"):
        if key in report:
            print(f"  {key} = {report[key]:.1f}")
    return EXIT_OK


def _scenario_pieces(pipe: Pipeline):
    cfg = pipe.cfg
    potential = simulator.reconstruct_potential_pv(pipe.ghi_analysis, pipe.pv_model,
                                                   cfg.site)
    n = min(len(potential), len(pipe.cons_series))
    inputs = simulator.ScenarioInputs(
        potential.slice_hours(0, n), pipe.cons_series.slice_hours(0, n),
        cfg.initial_soc_pct if cfg.initial_soc_pct is not None
        else float(pipe.soc_series.values[0]))
    provider = simulator.FittedProvider(pipe.load_forecaster, pipe.pv_model,
                                        pipe.ghi_forecast_by_day, cfg.site, cfg.z)
    return inputs, provider


def cmd_simulate(cfg: RunConfig, strategy: str) -> int:
    """Replay the telemetry span under one strategy and write the trajectory,
    flow and KPI files."""
    pipe = build_pipeline(cfg)
    inputs, provider = _scenario_pieces(pipe)
    params = StrategyParams(cfg.soc_low_limit_pct, cfg.site.battery.capacity_wh,
                            cfg.eta_charge)
    result = simulator.run_scenario(inputs, cfg.site, strategy=strategy,
                                    params=params if strategy == "forecast" else None,
                                    provider=provider if strategy == "forecast" else None)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    simulator.write_trajectory_csv(result, cfg.out_dir / "trajectory.csv")
    if result.setpoints:
        simulator.write_setpoint_log(result.setpoints, cfg.out_dir / "setpoints.csv")

    kpis = analysis.compute_kpis(result.trajectory, result.flows, cfg.site)
    doc = {
        "strategy": strategy,
        "soc_low_limit_pct": cfg.soc_low_limit_pct if strategy == "forecast" else None,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "kpis": {
            "pv_generation_wh": kpis.pv_generation_wh,
            "consumption_wh": kpis.consumption_wh,
            "avg_system_efficiency": kpis.avg_system_efficiency,
            "soc_ci_75": list(kpis.soc_ci_75),
            "direct_consumption_rate": kpis.direct_consumption_rate,
            "capacity_factor": kpis.capacity_factor,
            "outage_hours": kpis.outage_hours,
            "avg_soc_pct": kpis.avg_soc_pct,
            "full_charge_hours_per_day": kpis.full_charge_hours_per_day,
        },
    }
    (cfg.out_dir / "kpis.json").write_text(json.dumps(doc, indent=2))
    print(f"simulated {strategy}: avg SOC {kpis.avg_soc_pct:.1f}%, "
          f"outages {kpis.outage_hours} h, "
          f"full-charge {kpis.full_charge_hours_per_day:.1f} h/day")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    """Run the 40-point security-buffer sweep and emit report + plot data."""
    pipe = build_pipeline(cfg)
    inputs, provider = _scenario_pieces(pipe)
    result = analysis.sweep_soc_low_limit(inputs, provider, cfg.site, cfg.eta_charge,
                                          system_id="sys1")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    analysis.emit_report(result, cfg.out_dir, fmt="csv")
    analysis.emit_report(result, cfg.out_dir, fmt="json",
                         config_hash=cfg.config_hash, seed=cfg.seed)
    fans = {"sys1": {"consumption": pipe.cons_series, "pv": pipe.pv_series,
                     "soc": pipe.soc_series}}
    analysis.emit_plot_data(result, cfg.out_dir, fans)
    print(f"sweep: wrote {len(result.rows)} rows to {cfg.out_dir / 'sweep.csv'}")
    return EXIT_OK


def cmd_synth(profile: str, seed: int, days: int, out_dir, load_scale: float = 1.0) -> int:
    bundle = synth.generate(profile, seed=seed, days=days, load_scale=load_scale)
    paths = synth.write_fixture(bundle, out_dir)
    print(f"synth {profile}: wrote {paths['telemetry']}, {paths['irradiance']}, "
          f"{paths['config']}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simctl",
        description="Simulate and evaluate forecast-based battery charging "
                    "for standalone PV systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration JSON")
    common.add_argument("--seed", type=int, default=None, help="override config seed")
    common.add_argument("--out", default=None, help="override output directory")

    p_forecast = sub.add_parser("forecast", parents=[common],
                                help="fit models and write a day-ahead forecast")
    p_forecast.add_argument("--date", required=True,
                            help="target local day, YYYY-MM-DD")

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="replay the telemetry span under a strategy")
    p_sim.add_argument("--strategy", choices=["greedy", "forecast"],
                       default="forecast")
    p_sim.add_argument("--limit", type=float, default=None,
                       help="security buffer in percent (forecast strategy)")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="40-point security-buffer sweep")

    p_synth = sub.add_parser("synth", help="generate a synthetic fixture")
    p_synth.add_argument("--profile", choices=list(synth.PROFILES), required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--days", type=int, default=365)
    p_synth.add_argument("--load-scale", type=float, default=1.0)
    p_synth.add_argument("--out", required=True, help="fixture output directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args.profile, args.seed, args.days, args.out,
                             args.load_scale)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        if getattr(args, "limit", None) is not None:
            overrides["limit"] = args.limit
        cfg = load_config(args.config, overrides)
        if args.command == "forecast":
            return cmd_forecast(cfg, date.fromisoformat(args.date))
        if args.command == "simulate":
            return cmd_simulate(cfg, args.strategy)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PvBatSimError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def console_main() -> None:
    sys.exit(main())
