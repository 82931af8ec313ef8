"""
Experiment runner, configuration file and command line tests

Functions:
    run_application_test: Run the application tests
"""
import json
import os
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from config.experiment import ExperimentConfig
from core.application import (max_spreads, run_control_map, run_delta_map, run_experiment,
                              run_interval_sweep,
                              run_linear_compare, run_oracle, run_value_surface)
from core.errors import ValidationError
from core.model import ControlInterval
from core.payoff import Payoff
from report.csv_output import SURFACE_COLUMNS

import main

SMALL = dict(n_y=16, n_z=12, steps=10, sample_grid=(11, 7), compare_time=0.25)


@pytest.fixture
def cfg():
    return ExperimentConfig(**SMALL)


def test_config_round_trip(cfg, tmp_path):
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    path = cfg.save(str(tmp_path / 'cfg.json'))
    assert ExperimentConfig.load(path) == cfg


def test_config_defaults_are_case_study():
    cfg = ExperimentConfig.from_dict({})
    assert cfg.params.xi == 0.7 and cfg.params.rho == 0.5
    assert (cfg.control.lambda_min, cfg.control.lambda_max) == (-2.4, -1.6)
    assert cfg.payoff == Payoff.butterfly(50.0, 20.0)
    assert cfg.times == (0.5, 0.0)


def test_config_rejects_unknown_keys():
    with pytest.raises(ValidationError, match='unknown configuration keys: strike'):
        ExperimentConfig.from_dict({'strike': 50})


def test_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({'experiment': 'everything'})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({'sweep_diameters': [1.0, 0.5]})
    with pytest.raises(ValidationError, match=r'rho out of \(-1,1\)'):
        ExperimentConfig.from_dict({'rho': 1.0})


def test_overrides(cfg):
    assert cfg.with_overrides(steps=None) is cfg
    assert cfg.with_overrides(refinements=1).refinements == 1


def test_value_surface(cfg, tmp_path):
    result = run_value_surface(cfg, str(tmp_path))
    csv = os.path.join(str(tmp_path), 'surface.csv')
    assert csv in result.files
    with open(csv, encoding='utf-8') as fh:
        assert fh.readline().strip() == ','.join(SURFACE_COLUMNS)
    frame = pd.read_csv(csv)
    assert len(frame) == 2 * 11 * 7
    assert set(frame['t']) == {0.5, 0.0}
    assert frame['value_inf'].min() >= -1e-9 and frame['value_sup'].max() <= 20 + 1e-9
    assert np.all(frame['value_sup'] >= frame['value_inf'] - 1e-9)
    assert set(frame['control_sup']) <= {-2.4, -1.6}
    assert result.summary['controls_sup'] and set(result.summary['controls_sup']) <= {-2.4, -1.6}
    svg = [f for f in result.files if f.endswith('.svg')]
    assert len(svg) == 4
    with open(svg[0], encoding='utf-8') as fh:
        assert fh.read().startswith('<svg')


def test_reruns_are_identical(cfg, tmp_path):
    run_value_surface(cfg, str(tmp_path / 'a'))
    run_value_surface(cfg, str(tmp_path / 'b'))
    with open(tmp_path / 'a' / 'surface.csv', 'rb') as a, open(tmp_path / 'b' / 'surface.csv', 'rb') as b:
        assert a.read() == b.read()


def test_control_map(cfg, tmp_path):
    result = run_control_map(cfg, str(tmp_path))
    frame = pd.read_csv(tmp_path / 'controls.csv')
    assert set(frame['control_inf']) <= {-2.4, -1.6}
    assert result.summary['fraction_at_endpoints'] == 1.0


def test_linear_compare_is_nonnegative(cfg, tmp_path):
    result = run_linear_compare(cfg, str(tmp_path))
    assert result.summary['lambda_fixed'] == -2.4
    assert result.summary['min_difference'] >= -1e-10
    assert result.summary['max_difference'] > 1e-9
    assert pd.read_csv(tmp_path / 'linear_compare.csv')['difference'].min() >= -1e-9


def test_linear_compare_singleton(tmp_path):
    cfg = ExperimentConfig(control=ControlInterval.singleton(-2.4), **SMALL)
    result = run_linear_compare(cfg, str(tmp_path))
    assert abs(result.summary['min_difference']) <= 1e-12
    assert abs(result.summary['max_difference']) <= 1e-12


def test_linear_compare_rejects_outside_control(cfg, tmp_path):
    with pytest.raises(ValidationError):
        run_linear_compare(cfg, str(tmp_path), lambda_fixed=0.0)


def test_interval_sweep(cfg, tmp_path):
    result = run_interval_sweep(cfg, str(tmp_path), center=-1.25, diameters=[0.0, 1.0, 2.5])
    spreads = result.summary['max_spread']
    assert spreads[0] <= 1e-10
    assert np.all(np.diff(spreads) >= -1e-10)
    sweep = pd.read_csv(tmp_path / 'interval_sweep.csv')
    assert len(sweep) == 3 * len(cfg.query_points)
    assert np.all(sweep['value_sup'] >= sweep['value_inf'] - 1e-10)
    assert list(pd.read_csv(tmp_path / 'spreads.csv')['diameter']) == [0.0, 1.0, 2.5]


def test_relative_spread_ignores_vanishing_tails():
    # a tail node where V_sup is tiny must not dominate the ratio
    sup = SimpleNamespace(values=np.array([[0.0, 0.0, 0.0], [10.0, 4.0, 0.02]]))
    inf = SimpleNamespace(values=np.array([[0.0, 0.0, 0.0], [9.0, 2.5, 0.0]]))
    spread, relative = max_spreads(sup, inf)
    assert spread == pytest.approx(1.5)
    assert relative == pytest.approx(0.15)
    flat = SimpleNamespace(values=np.zeros((2, 3)))
    assert max_spreads(flat, flat) == (0.0, 0.0)


def test_delta_map_singleton_has_no_gap(tmp_path):
    cfg = ExperimentConfig(control=ControlInterval.singleton(-1.25), **SMALL)
    result = run_delta_map(cfg, str(tmp_path))
    assert set(result.summary) == {'call', 'butterfly'}
    for kind in ('call', 'butterfly'):
        assert result.summary[kind]['max_abs_difference'] <= 1e-10
        assert os.path.exists(tmp_path / f'delta_map_{kind}.csv')


def test_run_experiment_writes_manifest(cfg, tmp_path):
    result = run_experiment(cfg.with_overrides(experiment='control_map'), str(tmp_path))
    with open(tmp_path / 'manifest.json', encoding='utf-8') as fh:
        manifest = json.load(fh)
    assert manifest['config']['experiment'] == 'control_map'
    assert manifest['mesh']['nodes'] == 17 * 13
    assert 'controls.csv' in manifest['files']
    assert result.files[-1].endswith('manifest.json')


def test_oracle_report(cfg):
    small = cfg.with_overrides(payoff=Payoff.call(50.0), mc_paths=2000, mc_steps=10)
    report = run_oracle(small, 0.0, 50.0, 0.09)
    assert {'mc_price', 'mc_stderr', 'pde_price', 'pde_delta', 'cf_price', 'z_score'} <= set(report)
    assert 0.0 < report['pde_delta'] < 1.0


def test_cli_run(cfg, tmp_path, capsys):
    path = cfg.save(str(tmp_path / 'cfg.json'))
    out = tmp_path / 'out'
    assert main.main(['run', '--config', path, '--out', str(out), '--steps', '5']) == 0
    printed = capsys.readouterr().out.split()
    assert str(out / 'surface.csv') in printed
    with open(out / 'manifest.json', encoding='utf-8') as fh:
        assert json.load(fh)['config']['steps'] == 5


def test_cli_run_with_dumps(cfg, tmp_path):
    path = cfg.with_overrides(experiment='control_map').save(str(tmp_path / 'cfg.json'))
    out = tmp_path / 'out'
    assert main.main(['run', '--config', path, '--out', str(out), '--steps', '3', '--dump']) == 0
    assert sorted(os.listdir(out / 'debug')) == ['base_matrix.txt', 'lambda_down_matrix.txt', 'lambda_up_matrix.txt',
                                              'mesh.txt', 'rhs.txt']
    with open(out / 'manifest.json', encoding='utf-8') as fh:
        assert 'mesh.txt' in json.load(fh)['files']


def test_cli_reports_validation_errors(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'rho': 1.0}), encoding='utf-8')
    assert main.main(['run', '--config', str(path), '--out', str(tmp_path / 'out')]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1] == 'error: ValidationError: rho out of (-1,1)'


def test_cli_reports_missing_file(tmp_path, capsys):
    assert main.main(['run', '--config', str(tmp_path / 'none.json'), '--out', str(tmp_path)]) == 1
    assert capsys.readouterr().err.strip().splitlines()[-1].startswith('error: FileNotFoundError: ')


def test_cli_oracle(cfg, tmp_path, capsys):
    path = cfg.with_overrides(mc_paths=2000, mc_steps=10).save(str(tmp_path / 'cfg.json'))
    assert main.main(['oracle', '--config', path, '--lambda=-2.0', '--point', '50,0.09']) == 0
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report['lambda'] == -2.0
    assert 'cf_price' not in report


def test_cli_rejects_bad_point(capsys):
    assert main.main(['oracle', '--lambda=0', '--point', '50']) == 1
    assert 'error: ValidationError: point must read S,v' in capsys.readouterr().err


def run_application_test():
    """Run the experiment runner and CLI tests"""
    from test import run_module
    return run_module(__file__)
