import dataclasses

import numpy as np
import pandas as pd
import pytest

from pipeline.survey import (
    COMFORT_WEIGHTS, SURVEY_COLUMNS, ComfortAnswer, ComfortDurations, DwellingType, IqrFilterError,
    SurveySchemaError, SurveyValidationError, SurveyValueError, TypicalWeek, UnknownLiteralError, active_rooms,
    comfort_quota, compute_iqr_bounds, iqr_filter, is_month_day, map_comfort_category, parse_survey, synth_survey,
    write_rejected_report, write_survey,
)


@pytest.fixture(scope='module')
def records():
    return synth_survey(10, seed=7)


def _with_areas(record, areas):
    return [dataclasses.replace(record, dwelling_id=f"X{i:03d}", floor_area=float(a)) for i, a in enumerate(areas)]


def test_typical_week_assignment():
    week = TypicalWeek(tuple(range(24)), (1.0,) * 24, (2.0,) * 24)
    matrix = week.hourly_matrix()
    assert matrix.shape == (7, 24)
    assert (matrix[:5] == np.arange(24)).all()
    assert (matrix[5] == 1.0).all() and (matrix[6] == 2.0).all()
    with pytest.raises(SurveyValidationError):
        TypicalWeek((1.0,) * 23, (1.0,) * 24, (1.0,) * 24)
    with pytest.raises(SurveyValidationError):
        TypicalWeek.from_list([[1.0] * 24] * 2)


def test_active_rooms_drop_optional_bedroom():
    assert 'bedroom2' in active_rooms(DwellingType.MOZART_HOUSE, 4)
    assert 'bedroom2' not in active_rooms(DwellingType.MOZART_HOUSE, 3)
    with pytest.raises(SurveyValidationError):
        active_rooms(DwellingType.MATISSE_APARTMENT, 5)


def test_round_trip(tmp_path, records):
    path = write_survey(records, str(tmp_path / 'survey.csv'))
    assert parse_survey(path) == records


def test_empty_file_with_header(tmp_path):
    path = tmp_path / 'empty.csv'
    path.write_text(','.join(SURVEY_COLUMNS) + '\n', encoding='utf-8')
    assert parse_survey(str(path)) == []


def test_schema_mismatch_names_columns(tmp_path, records):
    path = str(tmp_path / 'survey.csv')
    write_survey(records, path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df.drop(columns=['avg_age']).assign(colour='blue').to_csv(path, index=False)
    with pytest.raises(SurveySchemaError) as err:
        parse_survey(path)
    assert err.value.missing == ['avg_age']
    assert err.value.unexpected == ['colour']


def test_bad_value_names_row_and_column(tmp_path, records):
    path = str(tmp_path / 'survey.csv')
    write_survey(records, path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df.loc[1, 'floor_area'] = 'abc'
    df.to_csv(path, index=False)
    with pytest.raises(SurveyValueError) as err:
        parse_survey(path)
    assert err.value.row == 2
    assert err.value.column == 'floor_area'


def test_unknown_literal(tmp_path, records):
    path = str(tmp_path / 'survey.csv')
    write_survey(records, path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df.loc[0, 'comfort_answer'] = 'Freezing'
    df.to_csv(path, index=False)
    with pytest.raises(UnknownLiteralError) as err:
        parse_survey(path)
    assert err.value.column == 'comfort_answer'


def test_na_tokens_for_heating_dates(tmp_path, records):
    path = str(tmp_path / 'survey.csv')
    write_survey(records, path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df.loc[0, 'heating_on_date'] = 'NA'
    df.loc[0, 'heating_off_date'] = '-'
    df.to_csv(path, index=False)
    parsed = parse_survey(path, exclusions={'NA', '-', ''})
    assert parsed[0].heating_on_date is None and parsed[0].heating_off_date is None


def test_column_mapping(tmp_path, records):
    path = str(tmp_path / 'survey.csv')
    write_survey(records, path)
    pd.read_csv(path, dtype=str, keep_default_na=False).rename(columns={'floor_area': 'Surface Habitable'}) \
        .to_csv(path, index=False)
    parsed = parse_survey(path, column_mapping={'surface_habitable': 'floor_area'})
    assert parsed == records


def test_record_invariants(records):
    record = records[0]
    with pytest.raises(SurveyValidationError):
        dataclasses.replace(record, floor_area=0.0)
    with pytest.raises(SurveyValidationError):
        dataclasses.replace(record, gender_ratio=1.5)
    with pytest.raises(SurveyValidationError):
        dataclasses.replace(record, heater_power={room: -1.0 for room in record.heater_power})
    with pytest.raises(SurveyValidationError):
        dataclasses.replace(record, heating_on_date='15/10')
    for impossible in ('02-30', '04-31', '11-31'):
        with pytest.raises(SurveyValidationError):
            dataclasses.replace(record, heating_off_date=impossible)
    assert dataclasses.replace(record, heating_off_date='02-29').heating_off_date == '02-29'


def test_iqr_identical_values_reject_nothing(records):
    kept, rejected = iqr_filter(_with_areas(records[0], [80] * 6), ['floor_area'])
    assert len(kept) == 6 and rejected == []


def test_iqr_outlier_rejected(records):
    population = _with_areas(records[0], list(range(1, 10)) + [1000])
    bounds = compute_iqr_bounds(population, ['floor_area'])
    assert bounds['floor_area'] == pytest.approx((3.25 - 6.75, 7.75 + 6.75))
    kept, rejected = iqr_filter(population, ['floor_area'])
    assert [r.value for r in rejected] == [1000.0]
    assert rejected[0].field == 'floor_area'
    assert len(kept) + len(rejected) == len(population)
    lower, upper = bounds['floor_area']
    assert all(lower <= r.floor_area <= upper for r in kept)

    again, none = iqr_filter(kept, ['floor_area'], bounds=bounds)
    assert again == kept and none == []


def test_iqr_errors(records):
    with pytest.raises(IqrFilterError):
        iqr_filter([], ['floor_area'])
    with pytest.raises(IqrFilterError):
        iqr_filter(records, ['no_such_field'])
    with pytest.raises(IqrFilterError):
        iqr_filter(records, ['department'])


def test_rejected_report(tmp_path, records):
    _, rejected = iqr_filter(_with_areas(records[0], list(range(1, 10)) + [1000]), ['floor_area'])
    path = write_rejected_report(rejected, str(tmp_path / 'rejected.csv'))
    report = pd.read_csv(path)
    assert list(report['dwelling_id']) == ['X009']
    assert 'floor_area=1000' in report.loc[0, 'reason']


def test_comfort_durations():
    assert map_comfort_category(ComfortAnswer.COMFORTABLE) == pd.Timedelta(0)
    assert map_comfort_category(ComfortAnswer.COLD_AT_LEAST_24H) == pd.Timedelta(hours=24)
    assert map_comfort_category(ComfortAnswer.COLD_FEW_DAYS) == pd.Timedelta(hours=72)
    span = pd.Timedelta(days=100)
    table = ComfortDurations(span=span)
    durations = [table.duration(a, span) for a in ComfortAnswer]
    assert all(b > a for a, b in zip(durations, durations[1:]))
    assert table.duration(ComfortAnswer.COLD_ALWAYS, span) == pd.Timedelta(days=90)


def test_comfort_durations_must_increase():
    with pytest.raises(ValueError):
        ComfortDurations({'Comfortable': 0, 'ColdAtLeast24h': 72, 'ColdFewDays': 24,
                          'ColdAlmostAlways': '60%', 'ColdAlways': '90%'})
    with pytest.raises(ValueError):
        ComfortDurations({'Comfortable': 0})


def test_synth_deterministic(tmp_path):
    first = write_survey(synth_survey(5, seed=7), str(tmp_path / 'a.csv'))
    second = write_survey(synth_survey(5, seed=7), str(tmp_path / 'b.csv'))
    with open(first, 'rb') as a, open(second, 'rb') as b:
        assert a.read() == b.read()


def test_synth_population():
    population = synth_survey(100, seed=1)
    assert len(population) == 100
    assert len({r.dwelling_id for r in population}) == 100
    counts = pd.Series([r.comfort_answer for r in population]).value_counts()
    assert set(counts.index) == set(ComfortAnswer)
    expected = np.array(COMFORT_WEIGHTS) * 100
    observed = np.array([counts[a] for a in ComfortAnswer])
    assert np.abs(observed - expected).max() <= 1.0


def test_comfort_quota():
    assert comfort_quota(100).sum() == 100
    assert (comfort_quota(5) == 1).all()
    assert comfort_quota(3).sum() == 3


def test_is_month_day():
    assert is_month_day('10-15') and is_month_day('02-29') and is_month_day('12-31')
    assert not is_month_day('02-30')
    assert not is_month_day('04-31')
    assert not is_month_day('13-01')
    assert not is_month_day('4-15')


def test_duration_order_is_checked_per_span():
    table = ComfortDurations({'Comfortable': 0, 'ColdAtLeast24h': 24, 'ColdFewDays': 72,
                              'ColdAlmostAlways': '60%', 'ColdAlways': '90%'})
    long_span = pd.Timedelta(days=60)
    assert table.duration_for_span(ComfortAnswer.COLD_ALWAYS, long_span) == pd.Timedelta(days=54)
    # 60 % of 100 h is below the 72 h entry
    with pytest.raises(ValueError):
        table.duration_for_span(ComfortAnswer.COLD_FEW_DAYS, pd.Timedelta(hours=100))
