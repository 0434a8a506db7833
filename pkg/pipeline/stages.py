"""
Pipeline stages. Each cmd_* reads only the artifacts of the stages before it
from the output directory, writes its own, and records counts, timings,
failures and artifact hashes in <out>/manifest.json.

    synth     -> paths.survey, paths.weather_dir/zone_<k>.csv
    ingest    -> survey/clean.csv, survey/rejected.csv
    generate  -> models/<id>.model.json, models/<id>.schedule.csv
    simulate  -> results/<id>.csv
    label     -> labels/<id>.csv, labels/<id>.report.json
    train     -> dataset/summary.json, train/<mode>/<classifier>.pkl, train/multihorizon.pkl
    evaluate  -> reports/metrics.json
"""
import functools
import logging
import os
import shutil
import time
from concurrent.futures import ProcessPoolExecutor

from pipeline.batch import batch_simulate
from pipeline.config_loader import ConfigValidationError, load_json_config
from pipeline.data_utils import ensure_dir, file_sha256, read_json, write_json
from pipeline.dataset import DatasetError, SplitSpec, assemble_dataset, split_dataset
from pipeline.labels import label_dwelling, write_labels
from pipeline.load_data import (MissingArtifactError, load_clean_survey, load_label_frames, load_models,
                                load_results, load_weather_zones, require)
from pipeline.metrics import confusion, evaluate, scores_to_dict
from pipeline.model_gen import (MissingRoomFlagError, ModelSettings, UnknownEraError, build_model,
                                load_constructions, load_templates, select_record, template_for, write_model)
from pipeline.models import load_model, predict_multihorizon, save_model, train_classifier, train_multihorizon
from pipeline.survey import (ComfortDurations, SurveyValidationError, iqr_filter, parse_survey, synth_survey,
                             write_rejected_report, write_survey)
from pipeline.thermal import SimulationSettings
from pipeline.validation import check_dwelling_ids
from pipeline.weather import load_climate_zones, save_weather, season_grid, synth_weather, weather_path, \
    zone_for_department

logger = logging.getLogger(__name__)

STAGE_ORDER = ('synth', 'ingest', 'generate', 'simulate', 'label', 'train', 'evaluate')
SEED_OFFSETS = {'synth_survey': 1, 'synth_weather': 100, 'split': 3, 'models': 4, 'multihorizon': 5}
EXIT_OK, EXIT_STAGE_FAILURE, EXIT_CONFIG_ERROR, EXIT_MISSING_ARTIFACT = 0, 1, 2, 3


class StageFailure(RuntimeError):
    pass


class RunManifest:
    """Self-describing record of a run, accumulated stage by stage."""

    def __init__(self, out_dir, config):
        self.out_dir = out_dir
        self.path = os.path.join(out_dir, 'manifest.json')
        fresh = {
            'config_digest': config.digest(),
            'config': config.to_dict(),
            'seeds': {name: config.stage_seed(offset) for name, offset in SEED_OFFSETS.items()},
            'stages': {},
            'failures': [],
        }
        if os.path.exists(self.path):
            previous = read_json(self.path)
            if previous.get('config_digest') == fresh['config_digest']:
                fresh['stages'] = previous.get('stages', {})
                fresh['failures'] = previous.get('failures', [])
        self.data = fresh

    def artifact_hashes(self, paths):
        return {os.path.relpath(p, self.out_dir).replace(os.sep, '/'): file_sha256(p) for p in sorted(paths)}

    def record_stage(self, stage, seconds, counts, artifacts, failures=(), extra=None):
        entry = {'seconds': round(seconds, 3), 'counts': counts, 'artifacts': self.artifact_hashes(artifacts)}
        if extra:
            entry.update(extra)
        self.data['stages'][stage] = entry
        self.data['failures'] = [f for f in self.data['failures'] if f.get('stage') != stage]
        self.data['failures'].extend({'stage': stage, **f} for f in failures)
        write_json(self.data, self.path)
        logger.info("Stage '%s' done in %.1f s: %s", stage, seconds, counts)


def _fresh_dir(path):
    if os.path.isdir(path):
        shutil.rmtree(path)
    return ensure_dir(path)


def _season_index(config):
    return season_grid(config.season['start'], config.season['end'], config.season['step_seconds'])


def _exclusions(config):
    return set(load_json_config(config.paths['exclusions']))


# ---------------------------------------------------------------- stages

def cmd_synth(config):
    """Synthetic survey and per-zone weather standing in for the real inputs."""
    started = time.perf_counter()
    zones, departments = load_climate_zones(config.paths['climate_zones'])
    records = synth_survey(config.synth['n_dwellings'], config.stage_seed(SEED_OFFSETS['synth_survey']),
                           sorted(departments))
    artifacts = [write_survey(records, config.paths['survey'])]
    for zone_id, zone in sorted(zones.items()):
        weather = synth_weather(zone, config.stage_seed(SEED_OFFSETS['synth_weather'] + zone_id),
                                config.season['start'], config.season['end'], config.season['timezone'])
        artifacts.append(save_weather(weather, weather_path(config.paths['weather_dir'], zone_id)))
    RunManifest(config.output_dir, config).record_stage(
        'synth', time.perf_counter() - started, {'dwellings': len(records), 'zones': len(zones)}, artifacts)
    return EXIT_OK


def cmd_ingest(config):
    started = time.perf_counter()
    records = parse_survey(config.paths['survey'], config.survey.get('column_mapping'), _exclusions(config))
    duplicated = check_dwelling_ids(records)
    if duplicated:
        raise SurveyValidationError(f"duplicate dwelling ids: {duplicated}")
    ComfortDurations(config.survey['comfort_durations'])
    kept, rejected = iqr_filter(records, config.survey['iqr_fields'])

    survey_dir = ensure_dir(os.path.join(config.output_dir, 'survey'))
    artifacts = [write_survey(kept, os.path.join(survey_dir, 'clean.csv')),
                 write_rejected_report(rejected, os.path.join(survey_dir, 'rejected.csv'))]
    RunManifest(config.output_dir, config).record_stage(
        'ingest', time.perf_counter() - started,
        {'parsed': len(records), 'kept': len(kept), 'rejected': len(rejected)}, artifacts)
    return EXIT_OK


def cmd_generate(config):
    started = time.perf_counter()
    records = load_clean_survey(config.output_dir, _exclusions(config))
    templates = load_templates(config.paths['templates'])
    constructions = load_constructions(config.paths['constructions'])
    zones, departments = load_climate_zones(config.paths['climate_zones'])
    settings = ModelSettings.from_config(config)
    index = _season_index(config)

    models_dir = _fresh_dir(os.path.join(config.output_dir, 'models'))
    artifacts, failures = [], []
    for dwelling_id, rec in sorted(records.items()):
        try:
            model, schedules = build_model(rec, template_for(rec.dwelling_type, templates),
                                           select_record(rec.construction_year_band, constructions),
                                           zones[zone_for_department(rec.department, departments)], index, settings)
            artifacts.extend(write_model(model, schedules, os.path.join(models_dir, f"{dwelling_id}.model.json"),
                                         os.path.join(models_dir, f"{dwelling_id}.schedule.csv")))
        except (UnknownEraError, MissingRoomFlagError, ValueError) as e:
            logger.error("Model generation failed for %s: %s", dwelling_id, e)
            failures.append({'dwelling_id': dwelling_id, 'error': f"{type(e).__name__}: {e}"})
    if not artifacts:
        raise StageFailure("no dwelling model could be generated")
    RunManifest(config.output_dir, config).record_stage(
        'generate', time.perf_counter() - started,
        {'records': len(records), 'models': len(records) - len(failures), 'failed': len(failures)},
        artifacts, failures)
    return EXIT_OK


def cmd_simulate(config):
    started = time.perf_counter()
    pairs = load_models(config.output_dir)
    weather = load_weather_zones(config.paths['weather_dir'], [m.climate_zone for m, _ in pairs])
    results_dir = _fresh_dir(os.path.join(config.output_dir, 'results'))
    batch = batch_simulate(pairs, weather, SimulationSettings.from_config(config), config.workers, results_dir,
                           config.seed, config.digest())
    if batch.n_ok == 0:
        raise StageFailure("every dwelling simulation failed")
    failures = [{k: v for k, v in f.items() if k != 'stage'} for f in batch.failures]
    RunManifest(config.output_dir, config).record_stage(
        'simulate', time.perf_counter() - started,
        {'dwellings': len(pairs), 'simulated': batch.n_ok, 'failed': len(failures)},
        list(batch.results.values()), failures,
        extra={'batch': {k: v for k, v in batch.manifest.items() if k != 'dwelling_seconds'},
               'dwelling_seconds': batch.manifest['dwelling_seconds']})
    return EXIT_OK


def _label_one(dwelling_id, result, answer, durations, labels_dir, refine, margin):
    try:
        t_op_pres, pair, labels, report = label_dwelling(
            result, functools.partial(durations.duration_for_span, answer), refine=refine, margin=margin)
        paths = write_labels(t_op_pres, labels, report, os.path.join(labels_dir, f"{dwelling_id}.csv"),
                             os.path.join(labels_dir, f"{dwelling_id}.report.json"))
        return dwelling_id, list(paths), report.fallback, None
    except ValueError as e:
        return dwelling_id, [], False, {'dwelling_id': dwelling_id, 'error': f"{type(e).__name__}: {e}"}


def cmd_label(config):
    started = time.perf_counter()
    results = load_results(config.output_dir)
    records = load_clean_survey(config.output_dir, _exclusions(config))
    durations = ComfortDurations(config.survey['comfort_durations'])
    labels_dir = _fresh_dir(os.path.join(config.output_dir, 'labels'))
    refine, margin = bool(config.labels['refine']), float(config.labels['comfort_margin'])

    jobs = [(dwelling_id, result, records[dwelling_id].comfort_answer, durations, labels_dir, refine, margin)
            for dwelling_id, result in sorted(results.items()) if dwelling_id in records]
    if not jobs:
        raise StageFailure("no simulated dwelling has a survey record")
    if config.workers == 1:
        outcomes = [_label_one(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_label_one, *zip(*jobs)))

    artifacts, failures, fallbacks = [], [], 0
    for dwelling_id, paths, fallback, failure in outcomes:
        if failure is not None:
            logger.error("Labeling failed for %s: %s", dwelling_id, failure['error'])
            failures.append(failure)
            continue
        artifacts.extend(paths)
        fallbacks += int(fallback)
    if fallbacks:
        logger.warning("%d dwellings labelled with the single-threshold fallback", fallbacks)
    if not artifacts:
        raise StageFailure("no dwelling could be labelled")
    RunManifest(config.output_dir, config).record_stage(
        'label', time.perf_counter() - started,
        {'dwellings': len(jobs), 'labelled': len(jobs) - len(failures), 'fallback': fallbacks,
         'failed': len(failures)}, artifacts, failures)
    return EXIT_OK


def _dataset(config):
    results = load_results(config.output_dir)
    labels = load_label_frames(config.output_dir)
    records = load_clean_survey(config.output_dir, _exclusions(config))
    unlabelled = sorted(set(results) - set(labels))
    if unlabelled:
        logger.warning("Skipping %d simulated dwellings without labels", len(unlabelled))
    return assemble_dataset({k: v for k, v in results.items() if k in labels}, labels, records)


def _split_spec(config, mode):
    return SplitSpec(tuple(config.split['fractions']), mode, config.stage_seed(SEED_OFFSETS['split']))


def cmd_train(config):
    started = time.perf_counter()
    dataset = _dataset(config)
    train_dir = _fresh_dir(os.path.join(config.output_dir, 'train'))
    artifacts, summary = [], {'digest': dataset.digest(), 'rows': len(dataset),
                              'dwellings': len(dataset.dwelling_ids), 'class_counts': dataset.class_counts(),
                              'splits': {}}
    seed = config.stage_seed(SEED_OFFSETS['models'])
    for mode in config.split['modes']:
        train, val, test = split_dataset(dataset, _split_spec(config, mode))
        summary['splits'][mode] = {'train': len(train), 'val': len(val), 'test': len(test)}
        mode_dir = ensure_dir(os.path.join(train_dir, mode))
        for name in config.models['classifiers']:
            logger.info("Training %s on the %s split (%d rows)", name, mode, len(train))
            model = train_classifier(name, train, val, config.models.get(name), seed, config.workers)
            artifacts.append(save_model(model, os.path.join(mode_dir, f"{name}.pkl")))

    if config.multihorizon.get('enabled', True):
        train, val, _ = split_dataset(dataset, _split_spec(config, 'by_dwelling'))
        model = train_multihorizon(train, val, int(config.multihorizon['past_window']), 'teacher_forced',
                                   int(config.multihorizon['n_estimators']),
                                   config.stage_seed(SEED_OFFSETS['multihorizon']), config.workers)
        artifacts.append(save_model(model, os.path.join(train_dir, 'multihorizon.pkl')))

    summary_path = write_json(summary, os.path.join(config.output_dir, 'dataset', 'summary.json'))
    RunManifest(config.output_dir, config).record_stage(
        'train', time.perf_counter() - started,
        {'rows': len(dataset), 'dwellings': summary['dwellings'], 'models': len(artifacts)},
        artifacts + [summary_path], extra={'dataset_digest': summary['digest']})
    return EXIT_OK


def _report(predictions, truth):
    cm, _ = confusion(truth, predictions)
    return {'scores': scores_to_dict(evaluate(predictions, truth)), 'confusion': cm.tolist(),
            'n': int(len(truth))}


def cmd_evaluate(config):
    started = time.perf_counter()
    summary = read_json(require(os.path.join(config.output_dir, 'dataset', 'summary.json'), 'train'))
    dataset = _dataset(config)
    if dataset.digest() != summary['digest']:
        raise StageFailure("dataset differs from the one the models were trained on; rerun 'train'")
    train_dir = os.path.join(config.output_dir, 'train')
    report = {'config_digest': config.digest(), 'seed': config.seed, 'dataset_digest': summary['digest'],
              'split_modes': {}}

    for mode in config.split['modes']:
        _, _, test = split_dataset(dataset, _split_spec(config, mode))
        report['split_modes'][mode] = {}
        for name in config.models['classifiers']:
            model = load_model(require(os.path.join(train_dir, mode, f"{name}.pkl"), 'train'))
            entry = _report(model.predict(test.X()), test.y())
            entry['flags'] = list(model.flags)
            report['split_modes'][mode][name] = entry
            logger.info("%s / %s: F1 %s", mode, name,
                        {k: round(v['f1'], 4) for k, v in entry['scores'].items()})

    if config.multihorizon.get('enabled', True):
        model = load_model(require(os.path.join(train_dir, 'multihorizon.pkl'), 'train'))
        _, _, test = split_dataset(dataset, _split_spec(config, 'by_dwelling'))
        report['multihorizon'] = {'past_window': model.past_window, 'flags': list(model.flags)}
        for mode in ('teacher_forced', 'recursive'):
            prediction = predict_multihorizon(model, test, mode)
            report['multihorizon'][mode] = _report(prediction.predictions, prediction.truth)

    path = write_json(report, os.path.join(config.output_dir, 'reports', 'metrics.json'))
    RunManifest(config.output_dir, config).record_stage(
        'evaluate', time.perf_counter() - started, {'rows': len(dataset)}, [path])
    return EXIT_OK


def cmd_pipeline(config):
    """All stages in order; synth only when enabled in the config."""
    for stage in STAGE_ORDER:
        if stage == 'synth' and not config.synth.get('enabled', False):
            continue
        logger.info("=== stage %s ===", stage)
        STAGES[stage](config)
    return EXIT_OK


STAGES = {
    'synth': cmd_synth,
    'ingest': cmd_ingest,
    'generate': cmd_generate,
    'simulate': cmd_simulate,
    'label': cmd_label,
    'train': cmd_train,
    'evaluate': cmd_evaluate,
    'pipeline': cmd_pipeline,
}


def run_stage(stage, config):
    """Validate, run and map the outcome to an exit status."""
    try:
        config.validate(stage)
    except ConfigValidationError as e:
        logger.error("%s", e)
        return EXIT_CONFIG_ERROR
    try:
        return STAGES[stage](config)
    except MissingArtifactError as e:
        logger.error("%s", e)
        return EXIT_MISSING_ARTIFACT
    except (StageFailure, DatasetError) as e:
        logger.error("Stage '%s' failed: %s", stage, e)
        return EXIT_STAGE_FAILURE
    except Exception as e:
        logger.exception("Stage '%s' failed: %s", stage, e)
        return EXIT_STAGE_FAILURE
