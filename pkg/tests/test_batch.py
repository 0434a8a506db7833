import dataclasses
import os

import pandas as pd
import pytest

from pipeline.batch import batch_simulate
from pipeline.data_utils import file_sha256
from pipeline.model_gen import build_model, load_constructions, load_templates, select_record, template_for
from pipeline.survey import synth_survey
from pipeline.thermal import simulate
from pipeline.weather import load_climate_zones, season_grid, synth_weather, zone_for_department

START, END = '2022-12-05 00:00', '2022-12-05 23:30'


@pytest.fixture(scope='module')
def inputs():
    zones, departments = load_climate_zones()
    templates, constructions = load_templates(), load_constructions()
    index = season_grid(START, END)
    models = []
    for rec in synth_survey(10, seed=21):
        zone = zones[zone_for_department(rec.department, departments)]
        models.append(build_model(rec, template_for(rec.dwelling_type, templates),
                                  select_record(rec.construction_year_band, constructions), zone, index))
    weather = {zone_id: synth_weather(zone, 100 + zone_id, START, END) for zone_id, zone in zones.items()}
    return models, weather


def test_worker_count_does_not_change_results(tmp_path, inputs):
    models, weather = inputs
    serial = batch_simulate(models, weather, workers=1, out_dir=str(tmp_path / 'serial'))
    pooled = batch_simulate(models, weather, workers=4, out_dir=str(tmp_path / 'pooled'))
    assert serial.failures == [] and pooled.failures == []
    assert sorted(serial.results) == sorted(pooled.results) == sorted(m.dwelling_id for m, _ in models)
    for dwelling_id, path in serial.results.items():
        assert os.path.basename(path) == f"{dwelling_id}.csv"
        assert file_sha256(path) == file_sha256(pooled.results[dwelling_id])


def test_in_memory_results_match_direct_simulation(inputs):
    models, weather = inputs
    batch = batch_simulate(models[:1], weather)
    model, schedules = models[0]
    direct = simulate(model, schedules, weather[model.climate_zone])
    pd.testing.assert_frame_equal(batch.results[model.dwelling_id].frame, direct.frame)


def test_failure_is_isolated(inputs):
    models, weather = inputs
    model, schedules = models[0]
    broken = dataclasses.replace(model, dwelling_id='D99999', climate_zone=99)
    batch = batch_simulate([(broken, schedules)] + models[1:], weather, seed=3, config_digest='abc')
    assert batch.n_ok == len(models) - 1
    assert [f['dwelling_id'] for f in batch.failures] == ['D99999']
    assert batch.failures[0]['stage'] == 'simulate'
    assert batch.manifest['n_failed'] == 1 and batch.manifest['seed'] == 3
    assert batch.manifest['config_digest'] == 'abc'


def test_workers_must_be_positive(inputs):
    models, weather = inputs
    with pytest.raises(ValueError):
        batch_simulate(models, weather, workers=0)
