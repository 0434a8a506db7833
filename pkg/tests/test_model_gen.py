import itertools

import numpy as np
import pandas as pd
import pytest

from pipeline.model_gen import (
    ORIENTATIONS, GridMismatchError, MissingRoomFlagError, TemplateMismatchError, UnknownEraError, build_model,
    daily_hours_mask, heating_season_mask, load_constructions, load_templates, orientation_matisse,
    orientation_mozart, read_model, select_record, shutter_schedule, template_for, write_model,
)
from pipeline.survey import DwellingType, synth_survey
from pipeline.weather import load_climate_zones, season_grid, zone_for_department

DAY = season_grid('2022-12-05 00:00', '2022-12-05 23:30')


@pytest.fixture(scope='module')
def templates():
    return load_templates()


@pytest.fixture(scope='module')
def built(templates):
    zones, departments = load_climate_zones()
    rec = synth_survey(3, seed=11)[0]
    index = season_grid('2022-12-05 00:00', '2022-12-11 23:30')
    template = template_for(rec.dwelling_type, templates)
    construction = select_record(rec.construction_year_band, load_constructions())
    zone = zones[zone_for_department(rec.department, departments)]
    model, schedules = build_model(rec, template, construction, zone, index)
    return rec, template, index, model, schedules


def test_templates_load(templates):
    assert template_for(DwellingType.MOZART_HOUSE, templates).template_id == 'Mozart'
    matisse = template_for('MatisseApartment', templates)
    assert sum(room.area for room in matisse.rooms) == pytest.approx(matisse.reference_area)
    adjacency = matisse.adjacency()
    assert adjacency['living']['kitchen'] == adjacency['kitchen']['living']


@pytest.mark.parametrize('flags', list(itertools.product([False, True], repeat=3)))
def test_orientation_mozart_table(flags):
    living, bedroom2, bedroom3 = flags
    expected = (0 if bedroom3 else 90) if living else (270 if bedroom2 and bedroom3 else 180)
    assert orientation_mozart({'living': living, 'bedroom2': bedroom2, 'bedroom3': bedroom3}) == expected


def test_orientation_mozart_missing_flag():
    with pytest.raises(MissingRoomFlagError):
        orientation_mozart({'living': True})


def test_orientation_matisse(templates):
    template = templates['Matisse']
    none = dict.fromkeys(template.south_flag_rooms, False)
    assert orientation_matisse(none, template) == 0
    assert orientation_matisse({**none, 'living': True}, template) == 0
    assert orientation_matisse({**none, 'kitchen': True, 'bedroom2': True}, template) == 180
    # the optional bedroom does not count when the dwelling lacks it
    assert orientation_matisse({**none, 'bedroom2': True}, template, rooms=('living', 'kitchen')) == 0


def test_shutters_follow_presence_and_sunset():
    presence = pd.Series(0, index=DAY)
    presence.iloc[:16] = 1
    presence.iloc[36:] = 1
    closed = shutter_schedule(presence, [pd.Timestamp('2022-12-05 17:10')])
    expected = np.ones(48, dtype=int)
    expected[16:36] = 0
    assert (closed.to_numpy() == expected).all()


def test_shutters_stay_closed_on_empty_day():
    closed = shutter_schedule(pd.Series(0, index=DAY), [pd.Timestamp('2022-12-05 17:10')])
    assert (closed == 1).all()


def test_shutters_need_whole_days():
    with pytest.raises(GridMismatchError):
        shutter_schedule(pd.Series(1, index=DAY[:47]), [pd.Timestamp('2022-12-05 17:10')])
    with pytest.raises(GridMismatchError):
        shutter_schedule(pd.Series(1, index=DAY), [])


def test_heating_season_mask():
    index = season_grid('2022-10-01 00:00', '2023-04-30 23:30')
    mask = heating_season_mask(index, '11-01', '03-31')
    assert mask[pd.Timestamp('2022-10-31 23:30')] == 0
    assert mask[pd.Timestamp('2022-11-01 00:00')] == 1
    assert mask[pd.Timestamp('2023-03-30 23:30')] == 1
    assert mask[pd.Timestamp('2023-03-31 00:00')] == 0
    defaults = heating_season_mask(index)
    assert defaults[pd.Timestamp('2022-10-15 00:00')] == 1 and defaults[pd.Timestamp('2022-10-14 23:30')] == 0
    # 2023 is not a leap year
    leap_day = heating_season_mask(index, '10-15', '02-29')
    assert leap_day[pd.Timestamp('2023-02-27 23:30')] == 1
    assert leap_day[pd.Timestamp('2023-02-28 00:00')] == 0


def test_daily_hours_mask_wraps_midnight():
    mask = daily_hours_mask(DAY, [23], duration_hours=2.0)
    assert mask.sum() == 4
    assert mask[pd.Timestamp('2022-12-05 00:30')] == 1 and mask[pd.Timestamp('2022-12-05 23:00')] == 1


def test_unknown_era():
    with pytest.raises(UnknownEraError):
        select_record('1850-1900')


def test_construction_u_values_improve():
    records = load_constructions()
    assert records['post2012'].u_value() < records['pre1948'].u_value()


def test_build_model(built):
    rec, template, index, model, schedules = built
    assert model.dwelling_id == rec.dwelling_id
    assert model.orientation in ORIENTATIONS
    assert model.room_names == list(rec.rooms)
    assert model.scale == pytest.approx(rec.floor_area / template.reference_area)
    for room in model.rooms:
        assert room.floor_area == pytest.approx(template.room(room.name).area * model.scale)
        assert room.heater.p_nom == rec.heater_power[room.name]
    names = set(model.room_names)
    assert all(set(p.rooms) <= names for p in model.partitions)
    assert schedules.index.equals(index)
    assert schedules.rooms == model.room_names
    # the whole week lies inside the heating season
    assert (schedules.heating_active == 1).all()


def test_build_model_template_mismatch(built, templates):
    rec, _, index, _, _ = built
    other = next(t for t in templates.values() if t.dwelling_type != rec.dwelling_type)
    zones, _ = load_climate_zones()
    with pytest.raises(TemplateMismatchError):
        build_model(rec, other, select_record(rec.construction_year_band), zones[1], index)


def test_model_round_trip(tmp_path, built):
    _, _, _, model, schedules = built
    model_path, schedule_path = write_model(model, schedules, str(tmp_path / 'm.model.json'),
                                            str(tmp_path / 'm.schedule.csv'))
    back, back_schedules = read_model(model_path, schedule_path)
    assert back == model
    pd.testing.assert_frame_equal(back_schedules.to_frame(), schedules.to_frame(), check_freq=False)
    assert back_schedules.heating_on_date == schedules.heating_on_date
