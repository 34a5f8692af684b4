"""Day-ahead PV forecast: horizontal irradiance projected onto the panel
plane, then mapped to power by linear regression on history.

The transposition uses the Erbs clearness-index split of GHI into beam and
diffuse plus an isotropic-sky model. Accuracy of the solar geometry is about
half a degree of zenith, fine for hourly energies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .core import HourlyForecast, SiteConfig
from .errors import DegenerateInput, InsufficientData, UnfittedModel

SOLAR_CONSTANT_W_M2 = 1367.0
# Beam-projection denominator floor: cos(85 deg), suppresses the horizon
# blow-up of beam / cos(zenith) near sunrise and sunset.
_COS_ZENITH_FLOOR = math.cos(math.radians(85.0))
MIN_REGRESSION_SAMPLES = 48


@dataclass
class SunPosition:
    zenith_deg: float
    azimuth_deg: float  # clockwise from north
    day_of_year: int    # used for the sun-earth distance correction

    def __post_init__(self):
        if not 0 <= self.zenith_deg <= 180:
            raise ValueError("zenith must lie in [0, 180]")
        self.azimuth_deg = self.azimuth_deg % 360.0


@dataclass
class RegressionModel:
    """Linear map from plane-of-array irradiation to PV energy per hour."""

    slope: float          # Wh per (Wh/m2)
    intercept: float      # Wh
    residual_std: float   # Wh
    n_train: int

    def __post_init__(self):
        if self.n_train < 2:
            raise ValueError("n_train must be >= 2")
        if self.residual_std < 0:
            raise ValueError("residual_std must be >= 0")


def sun_position(site: SiteConfig, when: datetime) -> SunPosition:
    """Sun zenith and azimuth for an instant, from standard declination and
    equation-of-time series (Spencer)."""
    when = when.astimezone(timezone.utc)
    doy = when.timetuple().tm_yday
    frac_hour = when.hour + when.minute / 60.0 + when.second / 3600.0
    gamma = 2.0 * math.pi * (doy - 1 + (frac_hour - 12.0) / 24.0) / 365.0

    decl = (0.006918 - 0.399912 * math.cos(gamma) + 0.070257 * math.sin(gamma)
            - 0.006758 * math.cos(2 * gamma) + 0.000907 * math.sin(2 * gamma)
            - 0.002697 * math.cos(3 * gamma) + 0.00148 * math.sin(3 * gamma))
    eot_min = 229.18 * (0.000075 + 0.001868 * math.cos(gamma) - 0.032077 * math.sin(gamma)
                        - 0.014615 * math.cos(2 * gamma) - 0.040849 * math.sin(2 * gamma))

    solar_hour = (frac_hour + site.longitude_deg / 15.0 + eot_min / 60.0) % 24.0
    hour_angle = math.radians(15.0 * (solar_hour - 12.0))
    lat = math.radians(site.latitude_deg)

    cos_zenith = (math.sin(lat) * math.sin(decl)
                  + math.cos(lat) * math.cos(decl) * math.cos(hour_angle))
    cos_zenith = min(1.0, max(-1.0, cos_zenith))
    zenith = math.degrees(math.acos(cos_zenith))

    azimuth = math.degrees(math.atan2(
        math.sin(hour_angle),
        math.cos(hour_angle) * math.sin(lat) - math.tan(decl) * math.cos(lat)))
    return SunPosition(zenith, (azimuth + 180.0) % 360.0, doy)


def extraterrestrial_horizontal(sun: SunPosition) -> float:
    """Extraterrestrial irradiance on a horizontal surface, W/m2."""
    cos_z = math.cos(math.radians(sun.zenith_deg))
    if cos_z <= 0:
        return 0.0
    eccentricity = 1.0 + 0.033 * math.cos(2.0 * math.pi * sun.day_of_year / 365.0)
    return SOLAR_CONSTANT_W_M2 * eccentricity * cos_z


def _erbs_diffuse_fraction(kt: float) -> float:
    if kt <= 0.22:
        return 1.0 - 0.09 * kt
    if kt <= 0.80:
        return (0.9511 - 0.1604 * kt + 4.388 * kt ** 2
                - 16.638 * kt ** 3 + 12.336 * kt ** 4)
    return 0.165


def project_to_poa(ghi_wh_m2: float, sun: SunPosition, site: SiteConfig,
                   albedo: float = 0.2) -> float:
    """Plane-of-array irradiation for one hour of GHI.

    GHI is split into beam and diffuse with the Erbs correlation, the beam is
    projected geometrically, diffuse uses the isotropic sky view factor, and
    a ground-reflected term uses the albedo. Returns 0 when the sun is below
    the horizon. A horizontal panel reproduces GHI exactly.
    """
    if ghi_wh_m2 < 0:
        raise ValueError("ghi must be >= 0")
    cos_z = math.cos(math.radians(sun.zenith_deg))
    if cos_z <= 0 or ghi_wh_m2 == 0:
        return 0.0

    i0h = extraterrestrial_horizontal(sun)
    kt = ghi_wh_m2 / max(i0h, 1e-9)
    df = _erbs_diffuse_fraction(kt)
    diffuse = df * ghi_wh_m2
    beam = ghi_wh_m2 - diffuse

    tilt = math.radians(site.panel_tilt_deg)
    az_diff = math.radians(sun.azimuth_deg - site.panel_azimuth_deg)
    cos_incidence = (math.cos(tilt) * cos_z
                     + math.sin(tilt) * math.sin(math.radians(sun.zenith_deg))
                     * math.cos(az_diff))
    cos_incidence = max(0.0, cos_incidence)
    # Floor the denominator at cos(85 deg) but never above the numerator, so
    # the tilt-0 case stays an exact identity at any zenith.
    denom = max(cos_z, min(_COS_ZENITH_FLOOR, cos_incidence))
    beam_ratio = cos_incidence / denom if denom > 0 else 0.0

    poa = (beam * beam_ratio
           + diffuse * (1.0 + math.cos(tilt)) / 2.0
           + ghi_wh_m2 * albedo * (1.0 - math.cos(tilt)) / 2.0)
    return max(0.0, poa)


def poa_series(ghi_series, site: SiteConfig, albedo: float = 0.2) -> np.ndarray:
    """Plane-of-array irradiation per hour of an hourly GHI series, using
    the hour-midpoint sun position."""
    out = np.zeros(len(ghi_series))
    for i in range(len(ghi_series)):
        midpoint = ghi_series.start + timedelta(hours=i, minutes=30)
        sun = sun_position(site, midpoint)
        if sun.zenith_deg < 90.0:
            out[i] = project_to_poa(float(ghi_series.values[i]), sun, site, albedo)
    return out


def fit_power_regression(poa_history, pv_power_history,
                         curtailment_mask=None) -> RegressionModel:
    """Ordinary least squares of PV energy on plane-of-array irradiation.

    Pairs where the curtailment mask is true are excluded (a fully charged
    battery clips real generation and would bias the slope low), as are
    sun-down hours (POA == 0).
    """
    poa = np.asarray(poa_history, dtype=float)
    pv = np.asarray(pv_power_history, dtype=float)
    if poa.shape != pv.shape:
        raise ValueError("poa and pv histories must be the same length")
    keep = poa > 0
    if curtailment_mask is not None:
        keep &= ~np.asarray(curtailment_mask, dtype=bool)
    x, y = poa[keep], pv[keep]
    if len(x) < MIN_REGRESSION_SAMPLES:
        raise InsufficientData(
            f"need >= {MIN_REGRESSION_SAMPLES} non-curtailed sun-up pairs, have {len(x)}")
    if np.ptp(x) == 0:
        raise DegenerateInput("POA history has zero variance")

    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    dof = max(1, len(x) - 2)
    residual_std = float(np.sqrt(np.sum(residuals ** 2) / dof))
    return RegressionModel(float(slope), float(intercept), residual_std, len(x))


def forecast_pv_24h(model: RegressionModel | None, ghi_forecast, site: SiteConfig,
                    z: float = 1.96) -> HourlyForecast:
    """24-hour PV forecast from a GHI forecast and a fitted regression.

    Per hour: project GHI to the panel plane at the hour midpoint, apply the
    regression and clamp into [0, pv_peak]; the interval is the expected
    value +/- z times the regression residual sigma, clamped likewise. Hours
    with the sun below the horizon are forced to (0, 0, 0).
    """
    if model is None:
        raise UnfittedModel("PV regression model not fitted")
    records = list(ghi_forecast)
    if len(records) != 24:
        raise ValueError(f"need 24 forecast hours, got {len(records)}")

    peak_wh = site.pv_peak_w * 1.0  # one-hour step
    low = np.zeros(24)
    exp = np.zeros(24)
    up = np.zeros(24)
    for i, rec in enumerate(records):
        midpoint = rec.timestamp + timedelta(minutes=30)
        sun = sun_position(site, midpoint)
        if sun.zenith_deg >= 90.0:
            continue
        poa = project_to_poa(rec.ghi_wh_per_m2, sun, site)
        e = min(peak_wh, max(0.0, model.slope * poa + model.intercept))
        exp[i] = e
        low[i] = min(peak_wh, max(0.0, e - z * model.residual_std))
        up[i] = min(peak_wh, max(0.0, e + z * model.residual_std))
    return HourlyForecast(records[0].timestamp, low, exp, up)


def regression_to_dict(model: RegressionModel, site: SiteConfig | None = None) -> dict:
    doc = {
        "slope": model.slope,
        "intercept": model.intercept,
        "residual_std": model.residual_std,
        "n_train": model.n_train,
    }
    if site is not None:
        doc["site_geometry"] = {
            "latitude_deg": site.latitude_deg,
            "longitude_deg": site.longitude_deg,
            "panel_tilt_deg": site.panel_tilt_deg,
            "panel_azimuth_deg": site.panel_azimuth_deg,
            "pv_peak_w": site.pv_peak_w,
        }
    return doc


def regression_from_dict(doc: dict) -> RegressionModel:
    return RegressionModel(doc["slope"], doc["intercept"],
                           doc["residual_std"], doc["n_train"])


def save_regression(model: RegressionModel, path, site: SiteConfig | None = None) -> None:
    Path(path).write_text(json.dumps(regression_to_dict(model, site), indent=2))


def load_regression(path) -> RegressionModel:
    return regression_from_dict(json.loads(Path(path).read_text()))
