import pandas as pd
import pytest

from pipeline.config_loader import ConfigValidationError, PipelineConfig, deep_merge, load_json_config, \
    load_pipeline_config
from pipeline.data_utils import clean_column, decode_cell, encode_cell, file_sha256, frame_digest, read_frame, \
    tidy_columns, write_frame
from pipeline.validation import check_dwelling_ids, check_required_columns, check_time_grid


def test_config_loader():
    config = load_json_config('config_test.json')
    assert config.get('label') == 'TEST'
    assert config.get('non_existent_key') is None
    with pytest.raises(FileNotFoundError):
        load_json_config('non_existent.json')


def test_deep_merge():
    base = {'a': {'x': 1, 'y': 2}, 'b': 3}
    merged = deep_merge(base, {'a': {'y': 5}, 'c': 4})
    assert merged == {'a': {'x': 1, 'y': 5}, 'b': 3, 'c': 4}
    assert base['a']['y'] == 2


def test_default_config_is_valid():
    config = load_pipeline_config()
    assert config.validate('generate') is config
    assert config.season['step_seconds'] == 1800
    assert config.stage_seed(3) == config.seed + 3


def test_overrides_change_digest():
    config = load_pipeline_config()
    other = load_pipeline_config(overrides={'seed': config.seed + 1})
    assert config.digest() == load_pipeline_config().digest()
    assert config.digest() != other.digest()


def test_missing_sections():
    with pytest.raises(ConfigValidationError) as err:
        PipelineConfig.from_dict({'seed': 1})
    assert "missing section 'paths'" in err.value.errors


def test_tidy_columns():
    df = pd.DataFrame(columns=[' Surface Habitable', 'Avg Age'])
    assert list(tidy_columns(df, {'surface_habitable': 'floor_area'}).columns) == ['floor_area', 'avg_age']


def test_clean_column():
    assert clean_column(' na ', {'NA'}) is None
    assert clean_column(float('nan')) is None
    assert clean_column('10-15', {'NA'}) == '10-15'


def test_cell_codec():
    assert encode_cell({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'
    assert decode_cell('[[1.0,0.0]]') == [[1.0, 0.0]]


def test_frame_io_is_lossless(tmp_path):
    index = pd.date_range('2023-01-01', periods=3, freq='30min')
    df = pd.DataFrame({'x': [0.1, 1 / 3, 2.0 ** -40]}, index=index)
    path = write_frame(df, str(tmp_path / 'sub' / 'frame.csv'))
    back = read_frame(path)
    assert (back['x'].to_numpy() == df['x'].to_numpy()).all()
    assert frame_digest(back) == frame_digest(df)
    assert file_sha256(path) == file_sha256(write_frame(back, str(tmp_path / 'again.csv')))


def test_duplicate_dwelling_ids():
    class Rec:
        def __init__(self, dwelling_id):
            self.dwelling_id = dwelling_id

    assert check_dwelling_ids([Rec('A'), Rec('B')]) == []
    assert check_dwelling_ids([Rec('A'), Rec('B'), Rec('A')]) == ['A']


def test_required_columns():
    df = pd.DataFrame(columns=['dwelling_id', 'floor_area'])
    assert check_required_columns(df, ['dwelling_id', 'department', 'floor_area', 'n_rooms']) == \
        ['department', 'n_rooms']


def test_time_grid():
    index = pd.date_range('2023-01-01', periods=5, freq='30min')
    assert check_time_grid(index, 1800)
    assert check_time_grid(index[:1], 1800)
    assert not check_time_grid(index.delete(2), 1800)
    assert not check_time_grid(index[::-1], 1800)
