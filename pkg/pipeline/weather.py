"""
Exterior conditions: the 30-minute weather series, climate zones and a seeded
synthetic weather generator standing in for the regulatory weather files.

Weather CSV format: two comment lines "# latitude=<deg>" and "# longitude=<deg>",
then a header row
    timestamp,t_out,rh,wind_speed,wind_direction,beam_h,diffuse_h,albedo
with naive local-standard timestamps every 1800 s.
"""
import logging
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from pvlib import clearsky

from pipeline.config_loader import load_json_config
from pipeline.data_utils import ensure_dir
from pipeline.solar import LOCAL_TZ, solar_position_series
from pipeline.validation import check_time_grid

logger = logging.getLogger(__name__)

STEP_SECONDS = 1800
WEATHER_COLUMNS = ['t_out', 'rh', 'wind_speed', 'wind_direction', 'beam_h', 'diffuse_h', 'albedo']
N_ZONES = 8


class WeatherFormatError(ValueError):
    pass


def season_grid(start, end, step_seconds=STEP_SECONDS):
    """Inclusive uniform grid of naive local timestamps."""
    return pd.date_range(pd.Timestamp(start), pd.Timestamp(end), freq=pd.Timedelta(seconds=step_seconds))


@dataclass(eq=False)
class WeatherSeries:
    frame: pd.DataFrame
    latitude: float
    longitude: float
    tz: str = LOCAL_TZ

    def __post_init__(self):
        self.validate()

    def __eq__(self, other):
        if not isinstance(other, WeatherSeries):
            return NotImplemented
        return (self.latitude == other.latitude and self.longitude == other.longitude
                and self.frame.equals(other.frame) and self.frame.index.equals(other.frame.index))

    def __len__(self):
        return len(self.frame)

    @property
    def index(self):
        return self.frame.index

    def validate(self):
        missing = [c for c in WEATHER_COLUMNS if c not in self.frame.columns]
        if missing:
            raise WeatherFormatError(f"weather series lacks columns {missing}")
        index = self.frame.index
        if not isinstance(index, pd.DatetimeIndex):
            raise WeatherFormatError("weather series needs a timestamp index")
        if not check_time_grid(index, STEP_SECONDS, "weather series"):
            raise WeatherFormatError(f"weather timestamps must advance by exactly {STEP_SECONDS} s")
        if (self.frame[['beam_h', 'diffuse_h']] < 0).any().any():
            raise WeatherFormatError("negative irradiance in weather series")
        if not self.frame['rh'].between(0, 100).all():
            raise WeatherFormatError("relative humidity outside [0, 100]")
        if not self.frame['albedo'].between(0, 1).all():
            raise WeatherFormatError("albedo outside [0, 1]")
        if self.frame[WEATHER_COLUMNS].isna().any().any():
            raise WeatherFormatError("missing values in weather series")

    def slice(self, index):
        """Sub-series on `index`; every timestamp must be present."""
        try:
            frame = self.frame.loc[index]
        except KeyError as exc:
            raise WeatherFormatError("weather series does not cover the requested grid") from exc
        return WeatherSeries(frame, self.latitude, self.longitude, self.tz)


@dataclass(frozen=True)
class ClimateZone:
    zone_id: int
    name: str
    latitude: float
    longitude: float
    t_mean: float
    t_amplitude: float
    t_diurnal: float
    clearness: float


def load_climate_zones(filename='climate_zones.json'):
    """Zones keyed by id and the department -> zone id table."""
    data = load_json_config(filename)
    zones = {}
    for entry in data['zones']:
        zone = ClimateZone(int(entry['id']), entry['name'], float(entry['latitude']), float(entry['longitude']),
                           float(entry['t_mean']), float(entry['t_amplitude']), float(entry['t_diurnal']),
                           float(entry['clearness']))
        zones[zone.zone_id] = zone
    if len(zones) != N_ZONES:
        raise ValueError(f"expected {N_ZONES} climate zones, found {len(zones)}")
    departments = {str(k): int(v) for k, v in data['departments'].items()}
    orphans = sorted(d for d, z in departments.items() if z not in zones)
    if orphans:
        raise ValueError(f"departments mapped to unknown zones: {orphans}")
    return zones, departments


def zone_for_department(department, departments):
    try:
        return departments[str(department)]
    except KeyError:
        raise ValueError(f"department '{department}' has no climate zone") from None


def weather_path(weather_dir, zone_id):
    return os.path.join(weather_dir, f"zone_{zone_id}.csv")


def save_weather(weather, path):
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# latitude={weather.latitude!r}\n")
        f.write(f"# longitude={weather.longitude!r}\n")
        weather.frame[WEATHER_COLUMNS].to_csv(f, index_label='timestamp', float_format='%.17g',
                                              lineterminator='\n')
    return path


def load_weather(path, tz=LOCAL_TZ):
    """Read and validate a weather CSV."""
    logger.info("Loading weather from %s", path)
    meta = {}
    n_comments = 0
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith('#'):
                break
            n_comments += 1
            key, _, value = line[1:].strip().partition('=')
            meta[key.strip()] = value.strip()
    try:
        latitude, longitude = float(meta['latitude']), float(meta['longitude'])
    except (KeyError, ValueError) as exc:
        raise WeatherFormatError(f"{path}: missing or invalid latitude/longitude header") from exc

    frame = pd.read_csv(path, skiprows=n_comments, index_col='timestamp', float_precision='round_trip')
    try:
        frame.index = pd.to_datetime(frame.index)
    except (ValueError, TypeError) as exc:
        raise WeatherFormatError(f"{path}: unparseable timestamps") from exc
    frame.index.name = None
    return WeatherSeries(frame[[c for c in WEATHER_COLUMNS if c in frame.columns]], latitude, longitude, tz)


def synth_weather(zone, seed, start, end, tz=LOCAL_TZ):
    """
    Deterministic synthetic weather for a climate zone: a seasonal cosine with
    its minimum in mid-January, a diurnal cycle peaking at 15:00, AR(1) noise,
    and Haurwitz clear-sky irradiance scaled by a daily cloudiness draw.
    """
    rng = np.random.default_rng(seed)
    index = season_grid(start, end)
    n = len(index)
    day = (index - index[0].normalize()).days.to_numpy()
    n_days = int(day[-1]) + 1
    hours = index.hour.to_numpy() + index.minute.to_numpy() / 60.0
    doy = index.dayofyear.to_numpy() + hours / 24.0

    sky = np.clip(rng.normal(zone.clearness, 0.2, n_days), 0.1, 1.0)[day]
    seasonal = zone.t_mean - zone.t_amplitude * np.cos(2.0 * np.pi * (doy - 15.0) / 365.25)
    diurnal = zone.t_diurnal * (0.5 + sky) * np.cos(2.0 * np.pi * (hours - 15.0) / 24.0)
    noise = np.empty(n)
    shocks = rng.normal(0.0, 0.25, n)
    noise[0] = shocks[0]
    for i in range(1, n):
        noise[i] = 0.98 * noise[i - 1] + shocks[i]
    t_out = seasonal + diurnal + noise

    pos = solar_position_series(zone.latitude, zone.longitude, index, tz)
    ghi_clear = clearsky.haurwitz(pd.Series(pos.zenith, index=index))['ghi'].to_numpy()
    ghi = ghi_clear * sky
    diffuse_fraction = np.clip(1.0 - 0.85 * (sky - 0.1) / 0.9, 0.15, 1.0)

    frame = pd.DataFrame({
        't_out': t_out,
        'rh': np.clip(80.0 - 2.0 * (t_out - zone.t_mean) + rng.normal(0.0, 5.0, n), 20.0, 100.0),
        'wind_speed': 4.0 * rng.weibull(2.0, n),
        'wind_direction': np.cumsum(rng.normal(0.0, 5.0, n)) % 360.0,
        'beam_h': ghi * (1.0 - diffuse_fraction),
        'diffuse_h': ghi * diffuse_fraction,
        'albedo': np.full(n, 0.2),
    }, index=index)
    logger.info("Synthesized %d weather steps for zone %s (seed %s)", n, zone.name, seed)
    return WeatherSeries(frame, zone.latitude, zone.longitude, tz)


def interpolate_substeps(values, n_sub):
    """
    Linear interpolation of step samples onto n_sub sub-steps per step.
    Output has (len - 1) * n_sub + 1 samples and equals `values` at every
    n_sub-th position.
    """
    values = np.asarray(values, dtype=float)
    if n_sub == 1 or len(values) < 2:
        return values.copy()
    fine = np.arange((len(values) - 1) * n_sub + 1) / n_sub
    out = np.interp(fine, np.arange(len(values)), values)
    out[::n_sub] = values
    return out
