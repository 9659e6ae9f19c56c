"""Config layering and the CSV / JSON writers."""

import io
import json
import math

import pytest

from errors import NonConvergenceError
from exporters import (
    FLOAT_FORMAT, finite_or_null, load_report, read_paths_csv, save_report, suite_frame,
    suite_to_dict, write_paths_csv, write_suite,
)
from processes import PathSample
from settings import DEFAULTS, load_config, load_run_config, parse_key_value, resolve
from verify import failed_report, make_report


def test_parse_key_value():
    parsed = parse_key_value("""
# comment
seed = 42
sampler.grid_points=512
kernels.t_min = 1e-3
range_policy = "fixed"
flag = yes
""")
    assert parsed == {
        'seed': 42,
        'sampler': {'grid_points': 512},
        'kernels': {'t_min': 1e-3},
        'range_policy': 'fixed',
        'flag': True,
    }


def test_parse_key_value_rejects_garbage():
    with pytest.raises(ValueError):
        parse_key_value("seed 42")
    with pytest.raises(ValueError):
        parse_key_value("=3")


def test_load_run_config_yaml_and_plain(tmp_path):
    yaml_file = tmp_path / 'run.yaml'
    yaml_file.write_text("sampler:\n  seed: 9\n", encoding='utf-8')
    assert load_run_config(yaml_file) == {'sampler': {'seed': 9}}
    plain = tmp_path / 'run.cfg'
    plain.write_text("seed=9\ngrid_points=128\n", encoding='utf-8')
    assert load_run_config(plain) == {'seed': 9, 'grid_points': 128}


def test_load_config_missing_file(tmp_path):
    assert load_config(str(tmp_path / 'absent.yaml')) == {}


def test_project_config_matches_defaults():
    base = load_config()
    for section, values in DEFAULTS.items():
        for key, value in values.items():
            assert base[section][key] == value, (section, key)


def test_resolve_precedence():
    base = {'sampler': {'seed': 1, 'grid_points': 512}}
    file_cfg = {'sampler': {'seed': 2}, 'grid_points': 1024}
    merged = resolve('sampler', {'seed': None, 'n_paths': 5}, file_cfg, base)
    assert merged['seed'] == 2
    assert merged['grid_points'] == 1024
    assert merged['n_paths'] == 5
    assert merged['range_policy'] == DEFAULTS['sampler']['range_policy']
    assert resolve('sampler', {'seed': 3}, file_cfg, base)['seed'] == 3


def _paths():
    return [PathSample(times=(0.0, 0.5), values=(0.0, 0.1), weight=1.0),
            PathSample(times=(0.0, 0.5), values=(0.0, -1.0 / 3.0), weight=0.25)]


def test_paths_csv_format():
    buffer = io.StringIO()
    rows = write_paths_csv(_paths(), buffer)
    assert rows == 4
    lines = buffer.getvalue().split('\n')
    assert lines[0] == 'path_id,time,value,weight'
    assert lines[2] == '0,0.5,' + FLOAT_FORMAT % 0.1 + ',1'
    assert '\r' not in buffer.getvalue()


def test_paths_csv_round_trip_precision(tmp_path):
    target = tmp_path / 'paths.csv'
    write_paths_csv(_paths(), str(target))
    frame = read_paths_csv(target)
    assert frame['value'].iloc[3] == -1.0 / 3.0
    assert frame['weight'].iloc[2] == 0.25


def test_read_paths_csv_missing_columns(tmp_path):
    target = tmp_path / 'bad.csv'
    target.write_text("path_id,time\n0,0.0\n", encoding='utf-8')
    with pytest.raises(ValueError):
        read_paths_csv(target)


def _reports():
    ok = make_report('P_SYMMETRY', {'t': 1.0}, 2.0, 2.0, 0.0)
    bad = failed_report('C_PATHS', {'a': 1.0}, 1e-6, NonConvergenceError("budget"))
    return [ok, bad]


def test_suite_document():
    document = suite_to_dict(_reports(), profile='fast')
    assert document['summary'] == {'total': 2, 'passed': 1}
    assert document['profile'] == 'fast'
    assert 'generated' in document
    assert document['suite'][1]['abs_err'] is None
    assert document['suite'][0]['abs_err'] == 0.0


def test_saved_report_round_trip(tmp_path, capsys):
    target = tmp_path / 'report.json'
    path = save_report(_reports(), str(target), profile='thorough')
    assert path == str(target)
    assert 'Report saved to:' in capsys.readouterr().err
    assert json.loads(target.read_text(encoding='utf-8'))['profile'] == 'thorough'
    assert 'Infinity' not in target.read_text(encoding='utf-8')
    loaded = load_report(target)
    assert [r.id for r in loaded] == ['P_SYMMETRY', 'C_PATHS']
    assert loaded[1].rel_err == math.inf
    assert not loaded[1].passed


def test_suite_csv():
    frame = suite_frame(_reports())
    assert list(frame['id']) == ['P_SYMMETRY', 'C_PATHS']
    assert json.loads(frame['args'].iloc[0]) == {'t': 1.0}
    buffer = io.StringIO()
    write_suite(_reports(), buffer, fmt='csv')
    assert buffer.getvalue().startswith('id,args,lhs,rhs')


def test_write_suite_rejects_unknown_format():
    with pytest.raises(ValueError):
        write_suite(_reports(), io.StringIO(), fmt='xml')


def _reject_constant(token):
    raise ValueError(f"non-standard JSON token {token}")


def test_suite_json_is_strict():
    buffer = io.StringIO()
    write_suite(_reports(), buffer, fmt='json')
    document = json.loads(buffer.getvalue(), parse_constant=_reject_constant)
    failed = document['suite'][1]
    assert failed['abs_err'] is None and failed['rel_err'] is None
    assert not failed['pass']


def test_finite_or_null_nested():
    cleaned = finite_or_null({'a': [1.0, math.inf], 'b': {'c': float('nan')}, 'd': 'x'})
    assert cleaned == {'a': [1.0, None], 'b': {'c': None}, 'd': 'x'}
