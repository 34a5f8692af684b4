"""Shared domain types and the SOC/energy arithmetic everything else builds on.

Conventions used across the package:

* all energy is Wh, all SOC is percent of capacity, time is UTC;
* a sample stamped ``T`` in an hourly series covers the hour ``[T, T+1h)``;
  energy values are the Wh moved during that hour, SOC values are the state
  at the *end* of that hour;
* SOC is treated as state of energy: linear in stored Wh, no voltage model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum

import numpy as np

HOUR = timedelta(hours=1)


class SeriesKind(Enum):
    ENERGY_WH = "energy_wh"
    SOC_PCT = "soc_pct"


def _check_hour_aligned(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {ts!r} must be timezone-aware (UTC)")
    ts = ts.astimezone(timezone.utc)
    if ts.minute or ts.second or ts.microsecond:
        raise ValueError(f"timestamp {ts!r} is not aligned to an hour boundary")
    return ts


@dataclass
class HourlyTimeSeries:
    """Contiguous hourly samples, the universal carrier for telemetry,
    forecasts and simulation output."""

    start: datetime
    values: np.ndarray
    kind: SeriesKind

    def __post_init__(self):
        self.start = _check_hour_aligned(self.start)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if self.kind is SeriesKind.ENERGY_WH:
            if np.any(self.values < 0):
                raise ValueError("energy samples must be >= 0")
        elif self.kind is SeriesKind.SOC_PCT:
            if np.any((self.values < 0) | (self.values > 100)):
                raise ValueError("SOC samples must lie in [0, 100]")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> datetime:
        """Stamp one hour past the last sample."""
        return self.start + HOUR * len(self.values)

    def timestamps(self) -> list[datetime]:
        return [self.start + HOUR * i for i in range(len(self.values))]

    def index_of(self, ts: datetime) -> int:
        ts = _check_hour_aligned(ts)
        idx = int((ts - self.start) / HOUR)
        if not 0 <= idx < len(self.values):
            raise IndexError(f"{ts} outside series span")
        return idx

    def slice_hours(self, i: int, j: int) -> "HourlyTimeSeries":
        return HourlyTimeSeries(self.start + HOUR * i, self.values[i:j].copy(), self.kind)


@dataclass
class BatterySpec:
    capacity_wh: float
    soc_hard_min_pct: float = 20.0
    roundtrip_eff: float = 0.90
    max_charge_w: float | None = None
    max_discharge_w: float | None = None

    def __post_init__(self):
        if self.capacity_wh <= 0:
            raise ValueError("capacity_wh must be > 0")
        if not 0 <= self.soc_hard_min_pct < 100:
            raise ValueError("soc_hard_min_pct must be in [0, 100)")
        if not 0 < self.roundtrip_eff <= 1:
            raise ValueError("roundtrip_eff must be in (0, 1]")
        for limit in (self.max_charge_w, self.max_discharge_w):
            if limit is not None and limit <= 0:
                raise ValueError("power limits must be positive when set")


@dataclass
class EfficiencyChain:
    """Static conversion efficiencies of the DC-coupled chain.

    Battery charge/discharge efficiencies default to a symmetric split of the
    round-trip value (sqrt per direction).
    """

    mppt_eff: float = 0.98
    inverter_eff: float = 0.943
    batt_charge_eff: float = field(default=math.sqrt(0.90))
    batt_discharge_eff: float = field(default=math.sqrt(0.90))

    def __post_init__(self):
        for name in ("mppt_eff", "inverter_eff", "batt_charge_eff", "batt_discharge_eff"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1]")

    @classmethod
    def from_roundtrip(cls, roundtrip_eff: float = 0.90, mppt_eff: float = 0.98,
                       inverter_eff: float = 0.943) -> "EfficiencyChain":
        side = math.sqrt(roundtrip_eff)
        return cls(mppt_eff=mppt_eff, inverter_eff=inverter_eff,
                   batt_charge_eff=side, batt_discharge_eff=side)

    @property
    def pv_to_load(self) -> float:
        """Direct path: panel DC through MPPT and inverter to AC load."""
        return self.mppt_eff * self.inverter_eff

    @property
    def pv_to_battery(self) -> float:
        """Charge path: panel DC through MPPT into the battery store."""
        return self.mppt_eff * self.batt_charge_eff

    @property
    def battery_to_load(self) -> float:
        """Discharge path: battery store through inverter to AC load."""
        return self.batt_discharge_eff * self.inverter_eff


@dataclass
class SiteConfig:
    latitude_deg: float
    longitude_deg: float
    panel_tilt_deg: float
    panel_azimuth_deg: float  # clockwise from north, 180 = equator-facing in the north
    pv_peak_w: float
    battery: BatterySpec
    eff: EfficiencyChain = field(default_factory=EfficiencyChain)
    timezone_offset_h: int = 0

    def __post_init__(self):
        if abs(self.latitude_deg) > 90:
            raise ValueError("latitude must lie in [-90, 90]")
        if not 0 <= self.panel_tilt_deg <= 90:
            raise ValueError("panel tilt must lie in [0, 90]")
        if self.pv_peak_w <= 0:
            raise ValueError("pv_peak_w must be > 0")
        product = self.eff.batt_charge_eff * self.eff.batt_discharge_eff
        if abs(product - self.battery.roundtrip_eff) > 1e-9:
            raise ValueError(
                f"battery charge*discharge efficiency {product:.6f} does not match "
                f"roundtrip_eff {self.battery.roundtrip_eff:.6f}")


@dataclass
class SocDeltaTriplet:
    """Predicted SOC change over a window: pessimistic, expected, optimistic."""

    low: float
    exp: float
    up: float

    def __post_init__(self):
        if not self.low <= self.exp <= self.up:
            raise ValueError(f"triplet must be ordered: {self.low} <= {self.exp} <= {self.up}")


@dataclass
class HourlyForecast:
    """24-hour horizon of (low, exp, up) hourly energies in Wh."""

    start: datetime
    low: np.ndarray
    exp: np.ndarray
    up: np.ndarray

    def __post_init__(self):
        self.start = _check_hour_aligned(self.start)
        self.low = np.asarray(self.low, dtype=float)
        self.exp = np.asarray(self.exp, dtype=float)
        self.up = np.asarray(self.up, dtype=float)
        if not (len(self.low) == len(self.exp) == len(self.up) == 24):
            raise ValueError("forecast must cover exactly 24 hours")
        if np.any(self.low < -1e-9):
            raise ValueError("forecast lower bounds must be >= 0")
        if np.any(self.low > self.exp + 1e-9) or np.any(self.exp > self.up + 1e-9):
            raise ValueError("forecast bounds must satisfy low <= exp <= up")

    def window_sums(self, i: int, j: int) -> tuple[float, float, float]:
        """(low, exp, up) energy sums over hours [i, j)."""
        return (float(self.low[i:j].sum()), float(self.exp[i:j].sum()),
                float(self.up[i:j].sum()))


def soc_after(soc_pct: float, net_batt_energy_wh: float, batt: BatterySpec) -> float:
    """New SOC after moving ``net_batt_energy_wh`` through the battery store.

    Positive energy charges, negative discharges; the value is measured at
    the battery terminals (callers apply conversion efficiencies). Result is
    clamped to [0, 100].
    """
    if not 0 <= soc_pct <= 100:
        raise ValueError("soc_pct must lie in [0, 100]")
    soc = soc_pct + 100.0 * net_batt_energy_wh / batt.capacity_wh
    return min(100.0, max(0.0, soc))


def delta_soc(e_pv_wh: float, e_cons_wh: float, eta_charge: float, e_batt_wh: float) -> float:
    """Predicted SOC change in percent for a window with the given PV and
    consumption energies.

    The efficiency multiplies the PV term only; the same kernel evaluates the
    optimistic bound with (pv_up, cons_low) and the pessimistic bound with
    (pv_low, cons_up).
    """
    if e_batt_wh <= 0:
        raise ValueError("e_batt_wh must be > 0")
    return 100.0 * (e_pv_wh * eta_charge - e_cons_wh) / e_batt_wh


def delta_soc_triplet(pv_sums: tuple[float, float, float],
                      cons_sums: tuple[float, float, float],
                      eta_charge: float, e_batt_wh: float) -> SocDeltaTriplet:
    """SOC-change triplet for a window given (low, exp, up) energy sums.

    Pairs pessimistic PV with optimistic consumption and vice versa, so the
    result is ordered whenever the inputs are interval-consistent.
    """
    pv_low, pv_exp, pv_up = pv_sums
    cons_low, cons_exp, cons_up = cons_sums
    return SocDeltaTriplet(
        low=delta_soc(pv_low, cons_up, eta_charge, e_batt_wh),
        exp=delta_soc(pv_exp, cons_exp, eta_charge, e_batt_wh),
        up=delta_soc(pv_up, cons_low, eta_charge, e_batt_wh),
    )
