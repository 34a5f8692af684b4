#!/usr/bin/env python3
# Sun path and plane-of-array transposition for a tilted panel in Lagos.
#
# GHI is split into beam and diffuse with the Erbs clearness-index
# correlation; the beam is projected onto the panel, diffuse uses the
# isotropic sky view factor. A horizontal panel reproduces GHI exactly;
# an equator-facing tilt gains at high zenith angles.

from datetime import datetime, timedelta, timezone

from pvbatsim.core import BatterySpec, SiteConfig
from pvbatsim.forecast_pv import (extraterrestrial_horizontal, project_to_poa,
                                  sun_position)

site = SiteConfig(latitude_deg=6.45, longitude_deg=3.4,
                  panel_tilt_deg=10.0, panel_azimuth_deg=180.0,
                  pv_peak_w=9750.0, battery=BatterySpec(10_000.0),
                  timezone_offset_h=1)

for label, day in (("equinox", datetime(2019, 3, 20, tzinfo=timezone.utc)),
                   ("june solstice", datetime(2019, 6, 21, tzinfo=timezone.utc))):
    print(f"\n{label} ({day.date()}), clear sky with clearness index 0.65:")
    print("utc  zenith  azimuth      ghi      poa   poa/ghi")
    for hour in range(5, 19):
        when = day + timedelta(hours=hour, minutes=30)
        sun = sun_position(site, when)
        if sun.zenith_deg >= 90:
            continue
        ghi = 0.65 * extraterrestrial_horizontal(sun)
        poa = project_to_poa(ghi, sun, site)
        print(f"{hour:3d}  {sun.zenith_deg:6.1f}  {sun.azimuth_deg:7.1f}"
              f"  {ghi:7.1f}  {poa:7.1f}  {poa / ghi:8.3f}")

# the tilt-0 identity: a horizontal panel sees exactly GHI
flat = SiteConfig(latitude_deg=6.45, longitude_deg=3.4, panel_tilt_deg=0.0,
                  panel_azimuth_deg=180.0, pv_peak_w=9750.0,
                  battery=BatterySpec(10_000.0), timezone_offset_h=1)
sun = sun_position(flat, datetime(2019, 3, 20, 12, 30, tzinfo=timezone.utc))
ghi = 700.0
print(f"\nhorizontal panel: POA({ghi}) = {project_to_poa(ghi, sun, flat)} (exact identity)")
