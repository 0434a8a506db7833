import json
import logging
import os

import pytest

from main import main
from pipeline.config_loader import ConfigValidationError, load_pipeline_config
from pipeline.data_utils import read_json
from pipeline.load_data import MissingArtifactError
from pipeline.stages import (
    EXIT_CONFIG_ERROR, EXIT_MISSING_ARTIFACT, EXIT_OK, STAGE_ORDER, RunManifest, cmd_simulate, run_stage,
)

SHORT_SEASON = {
    'seed': 7,
    'workers': 1,
    'synth': {'enabled': True, 'n_dwellings': 10},
    'season': {'start': '2022-12-05 00:00', 'end': '2022-12-06 23:30'},
    'survey': {'comfort_durations': {'Comfortable': 0, 'ColdAtLeast24h': 1, 'ColdFewDays': 2,
                                     'ColdAlmostAlways': '20%', 'ColdAlways': '40%'}},
    'models': {'classifiers': ['random_forest', 'decision_tree', 'mlp'],
               'random_forest': {'n_estimators': 10},
               'mlp': {'hidden_layers': [8], 'epochs': 2}},
    'multihorizon': {'past_window': 4, 'n_estimators': 10},
}


def _config(root, out='out', **overrides):
    data = json.loads(json.dumps(SHORT_SEASON))
    data['paths'] = {'survey': os.path.join(root, 'data', 'survey.csv'),
                     'weather_dir': os.path.join(root, 'data', 'weather'),
                     'output_dir': os.path.join(root, out)}
    data.update(overrides)
    return load_pipeline_config(None, data)


def _artifacts(out_dir):
    stages = read_json(os.path.join(out_dir, 'manifest.json'))['stages']
    return {stage: entry['artifacts'] for stage, entry in stages.items()}


@pytest.fixture(scope='module')
def pipeline_run(tmp_path_factory):
    root = str(tmp_path_factory.mktemp('run'))
    config = _config(root)
    status = run_stage('pipeline', config)
    return root, config, status


@pytest.mark.slow
def test_pipeline_writes_every_artifact(pipeline_run):
    root, config, status = pipeline_run
    assert status == EXIT_OK
    out = config.output_dir
    manifest = read_json(os.path.join(out, 'manifest.json'))
    assert manifest['config_digest'] == config.digest()
    assert set(manifest['stages']) == set(STAGE_ORDER)
    assert manifest['seeds']['split'] == 10
    for name in ('survey/clean.csv', 'survey/rejected.csv', 'dataset/summary.json', 'reports/metrics.json',
                 'train/by_step/random_forest.pkl', 'train/by_dwelling/mlp.pkl', 'train/multihorizon.pkl'):
        assert os.path.exists(os.path.join(out, name)), name
    assert len(os.listdir(os.path.join(root, 'data', 'weather'))) == 8

    report = read_json(os.path.join(out, 'reports', 'metrics.json'))
    assert set(report['split_modes']) == {'by_step', 'by_dwelling'}
    scores = report['split_modes']['by_step']['random_forest']['scores']
    assert set(scores) == {'Comfort', 'Discomfort', 'Unknown'}
    for score in scores.values():
        assert 0.0 <= score['f1'] <= 1.0
    assert {'teacher_forced', 'recursive'} <= set(report['multihorizon'])


@pytest.mark.slow
def test_label_reports_meet_constraints(pipeline_run):
    _, config, _ = pipeline_run
    labels_dir = os.path.join(config.output_dir, 'labels')
    reports = [name for name in os.listdir(labels_dir) if name.endswith('.report.json')]
    assert reports
    for name in reports:
        report = read_json(os.path.join(labels_dir, name))
        assert all(report['constraints'].values()), name
        assert report['longest_episode'] >= report['t_discomfort']


@pytest.mark.slow
def test_rerun_gives_identical_hashes(pipeline_run):
    _, config, _ = pipeline_run
    before = _artifacts(config.output_dir)
    assert run_stage('pipeline', config) == EXIT_OK
    assert _artifacts(config.output_dir) == before


@pytest.mark.slow
def test_pipeline_equals_stages_in_order(pipeline_run):
    root, config, _ = pipeline_run
    stepwise = _config(root, out='stepwise')
    for stage in STAGE_ORDER:
        assert run_stage(stage, stepwise) == EXIT_OK, stage
    expected, actual = _artifacts(config.output_dir), _artifacts(stepwise.output_dir)
    # the metrics report embeds the config digest, which covers the output directory
    expected['evaluate'].pop('reports/metrics.json')
    actual['evaluate'].pop('reports/metrics.json')
    assert actual == expected

    def scores(cfg):
        report = read_json(os.path.join(cfg.output_dir, 'reports', 'metrics.json'))
        return report['split_modes'], report['multihorizon']

    assert scores(stepwise) == scores(config)


def test_simulate_without_models_names_generate(tmp_path, caplog):
    config = _config(str(tmp_path))
    os.makedirs(config.paths['weather_dir'])
    with caplog.at_level(logging.ERROR):
        assert run_stage('simulate', config) == EXIT_MISSING_ARTIFACT
    assert "'generate'" in caplog.text
    with pytest.raises(MissingArtifactError) as err:
        cmd_simulate(config)
    assert err.value.stage == 'generate'


def test_invalid_config_lists_every_problem(tmp_path):
    config = _config(str(tmp_path), workers=0, split={'fractions': [0.5, 0.5, 0.5], 'modes': ['by_week']})
    with pytest.raises(ConfigValidationError) as err:
        config.validate()
    assert len(err.value.errors) == 3
    assert run_stage('pipeline', config) == EXIT_CONFIG_ERROR


def test_ingest_needs_survey_file(tmp_path):
    assert run_stage('ingest', _config(str(tmp_path))) == EXIT_CONFIG_ERROR


def test_main_exit_codes(tmp_path):
    assert main(['--config', str(tmp_path / 'missing.json')]) == EXIT_CONFIG_ERROR
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'workers': 0, 'paths': {'output_dir': str(tmp_path / 'out')}}), encoding='utf-8')
    assert main(['--config', str(path), '--stage', 'synth']) == EXIT_CONFIG_ERROR


def test_main_runs_synth(tmp_path):
    path = tmp_path / 'config.json'
    data = {'synth': {'n_dwellings': 3}, 'season': SHORT_SEASON['season'],
            'paths': {'survey': str(tmp_path / 'survey.csv'), 'weather_dir': str(tmp_path / 'weather')}}
    path.write_text(json.dumps(data), encoding='utf-8')
    assert main(['--config', str(path), '--stage', 'synth', '--out', str(tmp_path / 'out'), '--seed', '3']) == EXIT_OK
    assert os.path.exists(tmp_path / 'survey.csv')
    assert os.path.exists(tmp_path / 'out' / 'logs' / 'pipeline.log')
    assert read_json(str(tmp_path / 'out' / 'manifest.json'))['config']['seed'] == 3


def test_manifest_drops_stages_of_other_configs(tmp_path):
    config = _config(str(tmp_path))
    manifest = RunManifest(config.output_dir, config)
    manifest.record_stage('ingest', 1.0, {'kept': 1}, [])
    assert 'ingest' in RunManifest(config.output_dir, config).data['stages']
    other = _config(str(tmp_path), seed=8)
    assert RunManifest(other.output_dir, other).data['stages'] == {}


@pytest.fixture(scope='module')
def season_run(tmp_path_factory):
    """100 synthetic dwellings over the full heating season."""
    root = str(tmp_path_factory.mktemp('season'))
    config = load_pipeline_config(None, {
        'workers': 4,
        'synth': {'enabled': True, 'n_dwellings': 100},
        'models': {'classifiers': ['random_forest']},
        'paths': {'survey': os.path.join(root, 'data', 'survey.csv'),
                  'weather_dir': os.path.join(root, 'data', 'weather'),
                  'output_dir': os.path.join(root, 'out')},
    })
    assert run_stage('pipeline', config) == EXIT_OK
    return read_json(os.path.join(config.output_dir, 'reports', 'metrics.json'))


@pytest.mark.slow
def test_season_random_forest_scores(season_run):
    scores = season_run['split_modes']['by_step']['random_forest']['scores']
    assert scores['Comfort']['f1'] >= 0.95
    assert scores['Discomfort']['f1'] >= 0.90
    assert scores['Unknown']['f1'] == 1.0
    assert 'random_forest' in season_run['split_modes']['by_dwelling']


@pytest.mark.slow
def test_season_teacher_forcing_beats_recursion(season_run):
    horizon = season_run['multihorizon']
    forced = horizon['teacher_forced']['scores']['Discomfort']['f1']
    recursive = horizon['recursive']['scores']['Discomfort']['f1']
    assert forced >= recursive
    assert forced >= 0.90
