import numpy as np
import pandas as pd
import pytest

from pipeline.weather import (
    N_ZONES, WEATHER_COLUMNS, WeatherFormatError, WeatherSeries, interpolate_substeps, load_climate_zones,
    load_weather, save_weather, season_grid, synth_weather, weather_path, zone_for_department,
)


@pytest.fixture(scope='module')
def zones():
    return load_climate_zones()[0]


@pytest.fixture(scope='module')
def season(zones):
    return synth_weather(zones[1], 3, '2022-10-01 00:00', '2023-04-30 23:30')


def _frame(n=4, step='30min'):
    index = pd.date_range('2023-01-01', periods=n, freq=step)
    return pd.DataFrame({'t_out': 5.0, 'rh': 80.0, 'wind_speed': 2.0, 'wind_direction': 90.0,
                         'beam_h': 0.0, 'diffuse_h': 0.0, 'albedo': 0.2}, index=index)


def test_season_grid():
    index = season_grid('2022-10-01 00:00', '2023-04-30 23:30')
    assert len(index) == 10176
    assert (np.diff(index.asi8) == 1800 * 10**9).all()


def test_zones_and_departments():
    zones, departments = load_climate_zones()
    assert len(zones) == N_ZONES
    assert len(departments) == 96
    assert set(departments.values()) <= set(zones)
    assert zone_for_department('75', departments) == 1
    with pytest.raises(ValueError):
        zone_for_department('99', departments)


def test_synth_deterministic(zones, season):
    again = synth_weather(zones[1], 3, '2022-10-01 00:00', '2023-04-30 23:30')
    assert again == season
    other = synth_weather(zones[1], 4, '2022-10-01 00:00', '2023-04-30 23:30')
    assert other != season


def test_synth_winter_colder_than_october(season):
    t_out = season.frame['t_out']
    assert t_out[t_out.index.month == 1].mean() < t_out[t_out.index.month == 10].mean()


def test_synth_invariants(season):
    frame = season.frame
    assert len(frame) == 10176
    assert (frame[['beam_h', 'diffuse_h']] >= 0).all().all()
    assert frame['rh'].between(0, 100).all()
    night = frame.index.hour.isin([0, 1, 2, 3])
    assert (frame.loc[night, 'beam_h'] == 0).all()


def test_round_trip(tmp_path, season):
    path = save_weather(season, weather_path(str(tmp_path), 1))
    assert path.endswith('zone_1.csv')
    assert load_weather(path) == season


def test_missing_coordinates(tmp_path):
    path = tmp_path / 'w.csv'
    _frame().to_csv(path, index_label='timestamp')
    with pytest.raises(WeatherFormatError):
        load_weather(str(path))


def test_invalid_series():
    with pytest.raises(WeatherFormatError):
        WeatherSeries(_frame(step='1h'), 48.0, 2.0)
    negative = _frame()
    negative.iloc[1, negative.columns.get_loc('beam_h')] = -1.0
    with pytest.raises(WeatherFormatError):
        WeatherSeries(negative, 48.0, 2.0)
    shuffled = _frame().iloc[[0, 2, 1, 3]]
    with pytest.raises(WeatherFormatError):
        WeatherSeries(shuffled, 48.0, 2.0)
    with pytest.raises(WeatherFormatError):
        WeatherSeries(_frame().drop(columns=['albedo']), 48.0, 2.0)
    humid = _frame()
    humid['rh'] = 101.0
    with pytest.raises(WeatherFormatError):
        WeatherSeries(humid, 48.0, 2.0)


def test_slice(season):
    part = season.slice(season.index[:48])
    assert len(part) == 48 and list(part.frame.columns) == WEATHER_COLUMNS
    with pytest.raises(WeatherFormatError):
        season.slice(pd.date_range('2024-01-01', periods=2, freq='30min'))


def test_interpolate_substeps():
    values = np.array([0.0, 6.0, 3.0])
    fine = interpolate_substeps(values, 6)
    assert len(fine) == 13
    assert (fine[::6] == values).all()
    assert fine[1] == pytest.approx(1.0)
    assert (interpolate_substeps(values, 1) == values).all()
