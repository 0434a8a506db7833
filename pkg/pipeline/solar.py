"""
Solar geometry for the simulation: sun position, sunset times and transposition
of horizontal irradiance onto oriented facades (Hay-Davies-Klucher-Reindl sky).

Timestamps handled here are naive local standard time unless stated otherwise;
they are localized with pytz and converted to UTC before any solar formula.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import pytz
from pvlib import irradiance, solarposition

logger = logging.getLogger(__name__)

LOCAL_TZ = 'Etc/GMT-1'
SUNSET_ALTITUDE = -0.833  # degrees, refraction + solar radius
# Beam geometric factor limits. Above LOW_SUN_ZENITH the beam and circumsolar terms are
# dropped on every plane, horizontal included, so the result there is isotropic sky plus
# ground reflection and falls short of beam_h + diffuse_h.
MAX_BEAM_FACTOR = 10.0
LOW_SUN_ZENITH = 89.0


class PolarDayNightError(ArithmeticError):
    """The sun does not cross the horizon on that day at that latitude."""


@dataclass(frozen=True)
class SolarPosition:
    zenith: np.ndarray
    azimuth: np.ndarray
    dni_extra: np.ndarray


def to_utc(times, tz=LOCAL_TZ):
    """Localize naive local-standard timestamps and convert to UTC."""
    if not isinstance(times, pd.DatetimeIndex):
        times = pd.DatetimeIndex(np.atleast_1d(times))
    if times.tz is None:
        times = times.tz_localize(pytz.timezone(tz))
    return times.tz_convert(pytz.UTC)


def _utc_offset_hours(tz):
    return pytz.timezone(tz).utcoffset(pd.Timestamp('2000-01-01').to_pydatetime()).total_seconds() / 3600.0


def solar_position_series(latitude, longitude, times, tz=LOCAL_TZ):
    """
    Vectorized sun position. Zenith and azimuth in degrees (azimuth clockwise
    from north in [0, 360)), plus extraterrestrial normal irradiance in W/m2.
    """
    utc = to_utc(times, tz)
    doy = utc.dayofyear.to_numpy()
    declination = solarposition.declination_spencer71(doy)
    eot = solarposition.equation_of_time_spencer71(doy)
    hour_angle = np.asarray(solarposition.hour_angle(utc, longitude, eot), dtype=float)

    lat = np.radians(latitude)
    zenith = solarposition.solar_zenith_analytical(lat, np.radians(hour_angle), declination)
    with np.errstate(invalid='ignore', divide='ignore'):
        azimuth = solarposition.solar_azimuth_analytical(lat, np.radians(hour_angle), declination, zenith)
    azimuth = np.nan_to_num(np.degrees(azimuth), nan=180.0) % 360.0
    dni_extra = np.asarray(irradiance.get_extra_radiation(doy, method='spencer'), dtype=float)
    return SolarPosition(np.degrees(np.asarray(zenith, dtype=float)), np.asarray(azimuth, dtype=float), dni_extra)


def solar_position(latitude, longitude, timestamp, tz=LOCAL_TZ):
    """Sun position at a single instant; fields are plain floats."""
    if abs(latitude) > 90:
        raise ValueError(f"latitude must lie in [-90, 90], got {latitude}")
    pos = solar_position_series(latitude, longitude, [pd.Timestamp(timestamp)], tz)
    return SolarPosition(float(pos.zenith[0]), float(pos.azimuth[0]), float(pos.dni_extra[0]))


def sunset_times(latitude, longitude, dates, tz=LOCAL_TZ):
    """
    Sunset for each calendar date as naive local standard time. The hour-angle
    solution is refined once with declination and equation of time evaluated
    at the first sunset estimate.
    """
    if not isinstance(dates, pd.DatetimeIndex):
        dates = pd.DatetimeIndex(np.atleast_1d(dates))
    dates = dates.normalize()
    doy = dates.dayofyear.to_numpy().astype(float)
    lat = np.radians(latitude)
    sin_h0 = np.sin(np.radians(SUNSET_ALTITUDE))

    utc_hours = np.full(len(dates), 12.0 - longitude / 15.0)
    for _ in range(2):
        fractional_doy = doy + utc_hours / 24.0
        declination = solarposition.declination_spencer71(fractional_doy)
        eot = solarposition.equation_of_time_spencer71(fractional_doy)
        cos_h = (sin_h0 - np.sin(lat) * np.sin(declination)) / (np.cos(lat) * np.cos(declination))
        if np.any(np.abs(cos_h) > 1.0):
            bad = dates[np.abs(cos_h) > 1.0][0]
            raise PolarDayNightError(f"no sunset at latitude {latitude} on {bad.date()}")
        hour_angle = np.degrees(np.arccos(cos_h))
        utc_hours = 12.0 + hour_angle / 15.0 - longitude / 15.0 - eot / 60.0

    local_hours = utc_hours + _utc_offset_hours(tz)
    return dates + pd.to_timedelta(np.round(local_hours * 3600.0), unit='s')


def sunset_time(latitude, longitude, date, tz=LOCAL_TZ):
    return sunset_times(latitude, longitude, [pd.Timestamp(date)], tz)[0]


def hdkr_tilted_irradiance(beam_h, diffuse_h, albedo, surface_tilt, surface_azimuth, pos):
    """
    Plane-of-array irradiance (W/m2) with the HDKR anisotropic sky.

    beam_h, diffuse_h: horizontal beam and diffuse irradiance; albedo: ground
    reflectance; surface_tilt from horizontal and surface_azimuth clockwise from
    north, in degrees; pos: SolarPosition. Scalars or equal-length arrays.
    For zenith above LOW_SUN_ZENITH only sky and ground terms remain.
    """
    beam_h = np.asarray(beam_h, dtype=float)
    diffuse_h = np.asarray(diffuse_h, dtype=float)
    albedo = np.asarray(albedo, dtype=float)
    zenith = np.asarray(pos.zenith, dtype=float)
    ghi = beam_h + diffuse_h
    cos_z = np.cos(np.radians(zenith))
    sun_up = zenith <= LOW_SUN_ZENITH

    projection = irradiance.aoi_projection(surface_tilt, surface_azimuth, zenith, pos.azimuth)
    with np.errstate(divide='ignore', invalid='ignore'):
        rb = np.where(sun_up, np.clip(projection / cos_z, 0.0, MAX_BEAM_FACTOR), 0.0)
        anisotropy = np.where(sun_up, np.clip(beam_h / (np.asarray(pos.dni_extra) * cos_z), 0.0, 1.0), 0.0)
        modulating = np.where(ghi > 0, np.sqrt(np.where(ghi > 0, beam_h / ghi, 0.0)), 0.0)

    tilt = np.radians(surface_tilt)
    beam = (beam_h + diffuse_h * anisotropy) * rb
    sky = (diffuse_h * (1.0 - anisotropy) * (1.0 + np.cos(tilt)) / 2.0
           * (1.0 + modulating * np.sin(tilt / 2.0) ** 3))
    ground = ghi * albedo * (1.0 - np.cos(tilt)) / 2.0
    total = np.maximum(beam + sky + ground, 0.0)
    return float(total) if total.ndim == 0 else total


def facade_irradiance(weather, azimuths, tilt=90.0):
    """Tilted irradiance on each facade azimuth, one column per azimuth, on the weather index."""
    pos = solar_position_series(weather.latitude, weather.longitude, weather.frame.index, weather.tz)
    frame = weather.frame
    columns = {}
    for azimuth in sorted(set(azimuths)):
        columns[azimuth] = hdkr_tilted_irradiance(
            frame['beam_h'].to_numpy(), frame['diffuse_h'].to_numpy(), frame['albedo'].to_numpy(),
            tilt, azimuth, pos)
    return pd.DataFrame(columns, index=frame.index)
