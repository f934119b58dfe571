#!/usr/bin/env python3
"""
Tests for single runs, sweeps, moving-mode comparisons and the command line
"""

import json
import os
import sys

import numpy as np
import pandas as pd
import pytest

# Add parent directory to path to import modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import experiments_cli  # noqa: E402
from adaptive_controller import AdaptiveConfig  # noqa: E402
from config import Config, ConfigError  # noqa: E402
from error_ledger import verify_bound  # noqa: E402
from experiments_cli import (  # noqa: E402
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    RunConfig,
    build_parser,
    build_run_config,
    compare_moving_modes,
    config_from_args,
    main,
    run,
    sweep,
)
from hermite_basis import BasisParams, NumericalError  # noqa: E402
from problems import example1, example2  # noqa: E402


@pytest.fixture(autouse=True)
def log_to_tmp(tmp_path, monkeypatch):
    monkeypatch.setattr(Config, 'LOG_DIR', str(tmp_path / 'logs'))


def short_example2(**changes):
    values = dict(problem='example2', dt=0.01, t_final=0.2)
    values.update(changes)
    return RunConfig(**values)


def reduced_example1(**changes):
    values = dict(problem='example1', dt=2e-3, t_final=1.0, log_every=10,
                  initial_basis=BasisParams(1.0, 0.0, 30))
    values.update(changes)
    return RunConfig(**values)


# Configuration

def test_build_run_config_applies_dotted_keys():
    config = build_run_config({
        'problem': 'example2',
        'dt': '0.001',
        'initial_basis.n': '30',
        'adaptive.mu': '1.001',
        'adaptive.move_mode': 'left',
        'adaptive.enable_scale': 'true',
    })
    assert config.problem == 'example2'
    assert config.dt == 0.001
    assert config.initial_basis == BasisParams(1.2, 0.0, 30)
    assert config.adaptive.mu == 1.001
    assert config.adaptive.move_mode == 'left'
    assert config.adaptive.enable_scale
    # untouched keys keep the problem's own settings
    assert config.adaptive.d_max == example2().adaptive.d_max


@pytest.mark.parametrize('values', [
    {'dt': 'fast'},
    {'adaptive.q': 'nan'},
    {'adaptive.q': '1.5'},
    {'initial_basis.beta': '-1'},
    {'problem': 'example9'},
    {'adaptive.move_mode': 'up'},
])
def test_build_run_config_rejects_bad_values(values):
    with pytest.raises(ConfigError):
        build_run_config(values)


def test_flags_override_the_config_file(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text("problem=example2\nadaptive.mu=1.5\ndt=0.01\n")
    args = build_parser().parse_args(['run', '--config', str(path), '--mu', '1.01', '--disable-move',
                                      '--t-final', '0.5'])
    config = config_from_args(args)
    assert config.problem == 'example2'
    assert config.adaptive.mu == 1.01
    assert config.adaptive.move_mode == 'off'
    assert (config.dt, config.t_final) == (0.01, 0.5)


def test_run_config_falls_back_to_the_problem():
    problem, basis, adaptive = RunConfig(problem='example1').resolve()
    assert (problem.dt, problem.horizon) == (2e-4, 2.0)
    assert basis == BasisParams(1.0, 0.0, 40)
    assert adaptive == AdaptiveConfig()


@pytest.mark.parametrize('changes', [dict(log_every=0), dict(gl_order=0), dict(dt=-0.1), dict(problem='custom')])
def test_run_config_validation(changes):
    with pytest.raises(ConfigError):
        RunConfig(**changes).resolve()


# Runs

def test_short_example2_run_tracks_the_wave_left():
    rec = run(short_example2(t_final=1.0))
    frame = rec.to_frame()
    assert rec.ok
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 101
    assert np.all(np.diff(frame['t']) > 0)
    assert frame['t'].iloc[-1] == pytest.approx(1.0)
    assert rec.final_basis.x0 < 0
    assert rec.totals.counts['MoveLeft'] > 0
    assert rec.totals.e_move > 0
    assert rec.totals.e_scale == rec.totals.e_coarsen == 0.0
    assert np.all(np.diff(frame['e_move']) >= 0)


def test_log_stride_does_not_change_the_numerics():
    dense = run(short_example2(log_every=1))
    sparse = run(short_example2(log_every=10))
    assert len(dense.rows) == 21 and len(sparse.rows) == 3
    assert dense.final_basis == sparse.final_basis
    assert np.array_equal(dense.final_field.coeffs, sparse.final_field.coeffs)
    assert [e.to_dict() for e in dense.events] == [e.to_dict() for e in sparse.events]


def test_runs_are_deterministic():
    first = run(short_example2())
    second = run(short_example2())
    pd.testing.assert_frame_equal(first.to_frame(), second.to_frame())


def test_run_writes_csv_and_json(tmp_path):
    out = tmp_path / 'run'
    rec = run(short_example2(output_path=str(out)))
    frame = pd.read_csv(out / 'timeseries.csv')
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == len(rec.rows)
    events = json.loads((out / 'events.json').read_text())
    assert len(events) == len(rec.events)
    for entry in events:
        assert set(entry) == {'kind', 't', 'before', 'after', 'ledger_increment'}
        assert set(entry['after']) == {'beta', 'x0', 'n'}
    summary = json.loads((out / 'summary.json').read_text())
    assert summary['status'] == 'success'
    assert summary['config']['problem'] == 'example2'
    assert summary['ledger']['e_move'] == pytest.approx(rec.totals.e_move)


def test_reduced_example1_run():
    rec = run(reduced_example1())
    assert rec.ok
    assert rec.final_error < 1e-2
    # the solution centre sits at x = 2 when t = 1
    assert 1.0 <= rec.final_basis.x0 <= 3.0
    assert rec.final_basis.n > 30
    frame = rec.lower_bound_frame()
    assert frame['judged'].all()
    assert frame['passed'].all()
    assert np.all(np.isfinite(rec.to_frame()['rel_error']))


def test_reduced_example1_events_respect_their_ledger_terms():
    config = reduced_example1(t_final=0.4)
    rec = run(config, keep_transfers=True)
    assert rec.transfers
    report = verify_bound(rec.transfers, example1().analytic)
    assert report.passed, report.to_frame()[~report.to_frame()['passed']]


def test_short_example2_events_respect_their_ledger_terms():
    rec = run(short_example2(t_final=1.0), keep_transfers=True)
    assert rec.transfers
    report = verify_bound(rec.transfers, example2().analytic)
    assert report.passed, report.to_frame()[~report.to_frame()['passed']]


def test_real_problem_keeps_real_coefficients():
    rec = run(short_example2(t_final=1.0))
    assert np.max(np.abs(rec.final_field.coeffs.imag)) < 1e-12


def test_non_finite_error_measure_aborts_the_run(monkeypatch):
    def broken_tail(analytic, t, basis, keep):
        return float('nan') if t > 0 else 0.0

    monkeypatch.setattr(experiments_cli, 'analytic_tail_norm', broken_tail)
    rec = run(short_example2())
    assert rec.status == 'numerical_failure'
    assert 'non-finite error measure' in rec.error
    assert len(rec.rows) == len(rec.bound_rows) == 1


def test_numerical_failure_keeps_partial_record(monkeypatch):
    def explode(self, field, t, source):
        raise NumericalError('overflow')

    monkeypatch.setattr(experiments_cli.Propagator, 'advance', explode)
    rec = run(short_example2())
    assert rec.status == 'numerical_failure'
    assert rec.error == 'overflow'
    assert len(rec.rows) == 1
    assert rec.final_field is not None


# Sweeps and comparisons

def test_sweep_marks_failed_cells_and_continues():
    records, table = sweep(short_example2(t_final=0.05), 'mu', [1.0005, 0.5], workers=1)
    assert list(table['status']) == ['success', 'failed']
    assert records[0].ok and records[1] is None
    assert 'mu' in table['error'].iloc[1]


def test_sweep_of_a_single_value_matches_run():
    config = short_example2(t_final=0.05)
    records, table = sweep(config, 'delta', [0.0005], workers=4)
    single = run(config)
    assert table['final_error'].iloc[0] == single.final_error
    assert records[0].final_basis == single.final_basis


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(ConfigError):
        sweep(short_example2(), 'd_max', [0.1], workers=1)


def test_sweep_writes_table(tmp_path):
    config = short_example2(t_final=0.05, output_path=str(tmp_path))
    sweep(config, 'mu', [1.0005, 1.005], workers=1)
    table = pd.read_csv(tmp_path / 'sweep_mu.csv')
    assert list(table['value']) == [1.0005, 1.005]
    assert (tmp_path / 'mu=1.0005' / 'timeseries.csv').exists()


def test_compare_moving_modes():
    records, table = compare_moving_modes(short_example2(t_final=0.1), workers=1)
    assert list(table['mode']) == ['off', 'left', 'right', 'both']
    assert set(records) == {'off', 'left', 'right', 'both'}
    off = table.set_index('mode').loc['off']
    assert off['moves'] == 0 and off['e_move'] == 0.0 and off['final_x0'] == 0.0
    assert not any(e.kind.value == 'MoveLeft' for e in records['right'].events)
    assert not any(e.kind.value == 'MoveRight' for e in records['left'].events)


# Command line

def test_main_runs_and_reports_success(capsys):
    code = main(['run', '--problem', 'example2', '--dt', '0.01', '--t-final', '0.05'])
    assert code == EXIT_OK
    assert 'example2' in capsys.readouterr().out


def test_main_returns_config_exit_code():
    assert main(['run', '--problem', 'example2', '--dt', '0.3']) == EXIT_CONFIG
    assert main(['run', '--problem', 'example1', '--q', '2']) == EXIT_CONFIG


def test_main_returns_numerical_exit_code(monkeypatch):
    def explode(self, field, t, source):
        raise NumericalError('overflow')

    monkeypatch.setattr(experiments_cli.Propagator, 'advance', explode)
    assert main(['run', '--problem', 'example1', '--dt', '0.01', '--t-final', '0.01']) == EXIT_NUMERICAL


# Full-scale reproductions

def mostly_non_increasing(values, tolerance=0.1):
    """Non-increasing up to one adjacent rise smaller than tolerance (relative)."""
    rises = [(b - a) / max(abs(a), 1e-300) for a, b in zip(values, values[1:]) if b > a]
    return len(rises) <= 1 and all(rise < tolerance for rise in rises)


def test_mostly_non_increasing():
    assert mostly_non_increasing([5, 4, 4, 1])
    assert mostly_non_increasing([5, 5.2, 4])
    assert not mostly_non_increasing([5, 6, 4])
    assert not mostly_non_increasing([5, 5.1, 5.0, 5.1])


@pytest.mark.slow
def test_example1_full_run():
    rec = run(RunConfig(problem='example1', log_every=100))
    assert rec.ok
    assert rec.final_error < 1e-3
    assert 3.0 <= rec.final_basis.x0 <= 5.0
    assert rec.final_basis.n > 40
    frame = rec.lower_bound_frame()
    assert frame['judged'].all() and frame['passed'].all()


@pytest.mark.slow
def test_example1_gamma_trend():
    _, table = sweep(reduced_example1(), 'gamma', [1.02, 1.2, 2.0], workers=3)
    assert (table['status'] == 'success').all()
    assert mostly_non_increasing(list(table['final_n']))


@pytest.mark.slow
def test_example1_mu_trend():
    _, table = sweep(reduced_example1(), 'mu', [1.00005, 1.05, 1.5], workers=3)
    assert (table['status'] == 'success').all()
    assert mostly_non_increasing(list(table['final_x0']))


def value_at(frame, column, t):
    return frame.loc[np.isclose(frame['t'], t), column].iloc[0]


@pytest.mark.slow
def test_example2_bidirectional_moving_wins():
    records, table = compare_moving_modes(RunConfig(problem='example2', log_every=100), workers=4)
    errors = table.set_index('mode')['final_error']
    for mode in ('off', 'left', 'right'):
        assert errors['both'] * 5 < errors[mode]

    frames = {mode: rec.to_frame() for mode, rec in records.items()}
    assert value_at(frames['left'], 'rel_error', 2.0) <= 2 * value_at(frames['both'], 'rel_error', 2.0)
    off = frames['off']
    assert value_at(off, 'ext_left', 1.5) > value_at(off, 'ext_left', 0.0)
    assert value_at(off, 'ext_right', 5.0) > value_at(off, 'ext_right', 0.0)


@pytest.mark.slow
def test_example2_events_respect_their_ledger_terms():
    rec = run(RunConfig(problem='example2', log_every=1000), keep_transfers=True)
    assert rec.ok and rec.transfers
    report = verify_bound(rec.transfers, example2().analytic)
    assert report.passed, report.to_frame()[~report.to_frame()['passed']]


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
