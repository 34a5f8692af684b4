"""Shared builders for the test suite."""

from datetime import datetime, timezone

import numpy as np
import pytest

from pvbatsim.core import (BatterySpec, EfficiencyChain, HourlyTimeSeries,
                           SeriesKind, SiteConfig)

T0 = datetime(2019, 1, 1, tzinfo=timezone.utc)


def make_series(values, kind=SeriesKind.ENERGY_WH, start=T0):
    return HourlyTimeSeries(start, np.asarray(values, dtype=float), kind)


def make_site(lossless=False, **overrides):
    """Default 10 kWh / 9.75 kWp system; lossless variant for exact
    planning-arithmetic checks."""
    if lossless:
        base = dict(
            latitude_deg=0.0, longitude_deg=0.0,
            panel_tilt_deg=0.0, panel_azimuth_deg=180.0,
            pv_peak_w=9750.0,
            battery=BatterySpec(capacity_wh=10_000.0, roundtrip_eff=1.0),
            eff=EfficiencyChain(1.0, 1.0, 1.0, 1.0),
            timezone_offset_h=0,
        )
    else:
        base = dict(
            latitude_deg=6.45, longitude_deg=3.4,
            panel_tilt_deg=10.0, panel_azimuth_deg=180.0,
            pv_peak_w=9750.0,
            battery=BatterySpec(capacity_wh=10_000.0),
            eff=EfficiencyChain.from_roundtrip(0.90),
            timezone_offset_h=1,
        )
    base.update(overrides)
    return SiteConfig(**base)


@pytest.fixture
def site():
    return make_site()


@pytest.fixture
def lossless_site():
    return make_site(lossless=True)
