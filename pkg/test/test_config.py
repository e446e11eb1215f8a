"""
Run configuration, utilities and report rendering
"""

import pytest

from evmotion.compensation import OptimizerConfig
from evmotion.config import (CONFIG_SCHEME, RunConfig, coerce,
                             load_config_file, parse_key_values)
from evmotion.context import (environment, make_table, results_header,
                              success_table)
from evmotion.errors import InvalidConfigError
from evmotion.tracking import TrackerParams
from evmotion.util import SuperDict, format_trace, update


def test_defaults():
    config = RunConfig.defaults()
    assert set(config) == {name for name, _ in CONFIG_SCHEME}
    assert config.dt == 0.025
    assert config.bin_size == 0.3
    assert config.optimizer() == OptimizerConfig()
    assert config.tracker() == TrackerParams()
    assert config.detection() == {'threshold': 0.15, 'min_area': 10,
                                  'negative': False, 'grow_fraction': 0.5}
    assert config.sensor is None
    config.validate()


def test_key_value_file(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text("# slicing\n"
                    "dt = 0.01\n"
                    "\n"
                    "bin_size = 0.5   # coarser\n"
                    "tolerance = 1e-4\n"
                    "negative_tail = true\n"
                    "step_z =\n")
    config = RunConfig.load(path)
    assert config.dt == 0.01
    assert config.bin_size == 0.5
    assert config.tolerance == 1e-4
    assert config.negative_tail is True
    assert config.step_z is None


def test_yaml_file(tmp_path):
    path = tmp_path / 'run.yml'
    path.write_text("dt: 0.05\n"
                    "max_iterations: 20\n"
                    "tolerance: 1e-4\n"
                    "gate: 10\n")
    config = RunConfig.load(path)
    assert config.dt == 0.05
    assert config.max_iterations == 20
    assert config.tolerance == 1e-4
    # ints accepted for floats
    assert config.gate == 10.0 and isinstance(config.gate, float)


def test_overrides_win(tmp_path):
    path = tmp_path / 'run.yml'
    path.write_text("dt: 0.05\nbin_size: 0.5\n")
    config = RunConfig.load(path, {'dt': 0.01, 'bin_size': None})
    assert config.dt == 0.01
    assert config.bin_size == 0.5


def test_sensor():
    config = RunConfig.defaults().merge({'sensor_width': 64,
                                         'sensor_height': 48})
    assert config.sensor == (64, 48)


def test_unknown_setting():
    with pytest.raises(InvalidConfigError):
        RunConfig.defaults().merge({'bin_sise': 0.3})


@pytest.mark.parametrize('name, value', [('dt', 'fast'), ('max_iterations', 2.5),
                                         ('verbose', 'yes'), ('bin_size', None),
                                         ('max_iterations', True)])
def test_bad_values(name, value):
    with pytest.raises(InvalidConfigError):
        coerce(name, value)


def test_coerce():
    assert coerce('tolerance', '1e-3') == 0.001
    assert coerce('max_iterations', '12') == 12
    assert coerce('render', 5) == '5'
    assert coerce('chunk_size', None) is None


@pytest.mark.parametrize('changes', [dict(dt=0.0), dict(bin_size=-1.0),
                                     dict(threshold=1.5), dict(grow_fraction=0.0),
                                     dict(gate=0.0),
                                     dict(overlap=0.0),
                                     dict(events_per_slice=0)])
def test_validation(changes):
    config = RunConfig.defaults().merge(changes)
    with pytest.raises(InvalidConfigError):
        config.validate()


def test_malformed_files(tmp_path):
    with pytest.raises(InvalidConfigError):
        parse_key_values("dt 0.01")
    path = tmp_path / 'list.yml'
    path.write_text("- 1\n- 2\n")
    with pytest.raises(InvalidConfigError):
        load_config_file(path)


# ------------------------------------------
# Utilities
# ------------------------------------------

def test_update():
    "Layering of nested settings"
    base = {'a': 1, 'b': {'c': 2, 'd': 3}, 'e': [1]}
    result = update(base, {'a': 5, 'b': {'d': 4}, 'e': [2], 'f': None})
    assert result is base
    assert base == {'a': 5, 'b': {'c': 2, 'd': 4}, 'e': [2], 'f': None}
    assert update(1, 2) == 2


def test_super_dict():
    d = SuperDict(a=1)
    d.b = 2
    assert d['b'] == 2 and d.a == 1
    with pytest.raises(AttributeError):
        d.missing


def test_format_trace():
    assert 'evmotion' in format_trace("Hello", 3)
    assert format_trace("Hello", 3).endswith(' 3')


# ------------------------------------------
# Reports
# ------------------------------------------

def test_results_header():
    config = RunConfig.defaults()
    lines = results_header('evmotion compensate events.txt', config)
    assert lines[0] == '# evmotion compensate events.txt'
    assert all(line.startswith('# ') for line in lines)
    assert '# dt = 0.025' in lines
    assert '# step_z = None' in lines
    assert lines == results_header('evmotion compensate events.txt', config)
    assert environment()['package'] == 'evmotion'


def test_timestamped_header():
    lines = results_header('run', {}, timestamp=True)
    assert len(lines) == 2
    assert lines[1].count(',') >= 2


def test_table():
    text = make_table([['a', 1], ['bbb', 22]], ['Name', 'N'])
    lines = text.splitlines()
    assert lines[0] == 'Name | N '
    assert lines[1] == '-----+---'
    assert lines[2] == 'a    | 1 '
    assert lines[3] == 'bbb  | 22'


def test_success_table():
    text = success_table({'shapes': 100.0, 'boxes': 42.125})
    header, rule, row = text.splitlines()
    assert header.split(' | ')[0].strip() == 'Sequence'
    assert [cell.strip() for cell in row.split(' | ')] == \
        ['Success Rate', '100.00%', '42.12%']
    assert 'shapes' in header and 'boxes' in header
