#!/usr/bin/env python3
"""
Experiment Runner
Runs the adaptive Hermite solver on the built-in problems, sweeps controller
parameters one at a time, compares moving modes, and writes per-run CSV time
series with JSON event logs and summaries.

Usage:
    python experiments_cli.py run --problem example1 --out runs/ex1
    python experiments_cli.py sweep --param q --values 0.8 0.9 0.99 --t-final 1
    python experiments_cli.py compare --out runs/moving
"""

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from adaptive_controller import MOVE_MODES, AdaptationEvent, AdaptiveConfig, AdaptiveController, BasisTransfer
from config import Config, ConfigError, load_config_file, parse_bool
from error_ledger import LedgerTotals, frequency_lower_bound_report, record
from hermite_basis import BasisParams, NumericalError, SpectralField, analyze, collocation_points
from indicators import DegenerateIndicatorError, frequency_cut, snapshot
from problems import (
    ParabolicProblem,
    absolute_l2_error,
    analytic_norm,
    analytic_tail_norm,
    get_problem,
    relative_l2_error,
)
from time_integrator import Propagator

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['t', 'rel_error', 'beta', 'x0', 'n', 'freq', 'ext_left', 'ext_right',
               'e_scale', 'e_move', 'e_coarsen']
SWEEP_PARAMETERS = ('q', 'nu', 'delta', 'mu', 'gamma', 'eta', 'eta0')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_FLOAT_KEYS = ('q', 'nu', 'delta', 'mu', 'eta', 'eta0', 'gamma', 'd_max', 'beta_min', 'beta_max')
_BOOL_KEYS = ('enable_move_right', 'enable_move_left', 'enable_scale', 'enable_order')


@dataclass(frozen=True)
class RunConfig:
    """One solver run. Unset basis, controller and timing fall back to the problem's own."""

    problem: str = 'example1'
    initial_basis: Optional[BasisParams] = None
    adaptive: Optional[AdaptiveConfig] = None
    dt: Optional[float] = None
    t_final: Optional[float] = None
    gl_order: int = Config.DEFAULT_GL_ORDER
    output_path: Optional[str] = None
    log_every: int = 1
    custom_problem: Optional[ParabolicProblem] = None

    def resolve(self) -> Tuple[ParabolicProblem, BasisParams, AdaptiveConfig]:
        if self.log_every < 1:
            raise ConfigError(f"log_every must be at least 1, got {self.log_every}")
        if self.gl_order < 1:
            raise ConfigError(f"gl_order must be at least 1, got {self.gl_order}")
        for name in ('dt', 't_final'):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.problem == 'custom':
            if self.custom_problem is None:
                raise ConfigError("problem 'custom' needs a ParabolicProblem instance")
            problem = self.custom_problem
        else:
            problem = get_problem(self.problem)
        problem = problem.with_timing(self.dt, self.t_final)
        basis = self.initial_basis or problem.basis
        adaptive = (self.adaptive or problem.adaptive).validate()
        return problem, basis, adaptive

    def to_dict(self) -> Dict:
        problem, basis, adaptive = self.resolve()
        return {
            'problem': self.problem,
            'dt': problem.dt,
            't_final': problem.horizon,
            'gl_order': self.gl_order,
            'output_path': self.output_path,
            'log_every': self.log_every,
            'initial_basis': basis.to_dict(),
            'adaptive': adaptive.to_dict(),
        }


@dataclass
class RunRecord:
    """Logged rows, events and ledger of one run."""

    config: RunConfig
    rows: List[Dict] = field(default_factory=list)
    events: List[AdaptationEvent] = field(default_factory=list)
    transfers: List[BasisTransfer] = field(default_factory=list)
    bound_rows: List[Dict] = field(default_factory=list)
    totals: LedgerTotals = field(default_factory=LedgerTotals)
    final_field: Optional[SpectralField] = None
    steps: int = 0
    wall_time: float = 0.0
    status: str = 'running'
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == 'success'

    @property
    def final_error(self) -> float:
        """Last logged relative error.

        NaN only when nothing was logged, the problem has no analytic solution,
        or that solution vanishes; a non-finite measurement aborts the run instead.
        """
        return self.rows[-1]['rel_error'] if self.rows else float('nan')

    @property
    def final_basis(self) -> Optional[BasisParams]:
        return self.final_field.basis if self.final_field is not None else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=CSV_COLUMNS)

    def lower_bound_frame(self) -> pd.DataFrame:
        return frequency_lower_bound_report(self.bound_rows)

    def summary(self) -> Dict:
        measured = self.bound_rows[-1]['abs_error'] if self.bound_rows else float('nan')
        basis = self.final_basis
        return {
            'status': self.status,
            'error': self.error,
            'config': self.config.to_dict(),
            'steps': self.steps,
            'wall_time_seconds': self.wall_time,
            'final_error': self.final_error,
            'final_basis': basis.to_dict() if basis else None,
            'counts': dict(self.totals.counts),
            'ledger': self.totals.summary(measured),
        }

    def write(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(out_dir / 'timeseries.csv', index=False)
        with open(out_dir / 'events.json', 'w', encoding='utf-8') as f:
            json.dump([event.to_dict() for event in self.events], f, indent=2)
        with open(out_dir / 'summary.json', 'w', encoding='utf-8') as f:
            json.dump(self.summary(), f, indent=2, ensure_ascii=False)
        logger.info(f"Run outputs saved to {out_dir}")
        return out_dir


def _log_row(rec: RunRecord, problem: ParabolicProblem, spectral: SpectralField, t: float):
    snap = snapshot(spectral)
    basis = spectral.basis
    rel_error = float('nan')
    if problem.analytic is not None:
        try:
            rel_error = relative_l2_error(spectral, problem.analytic, t)
        except DegenerateIndicatorError:
            pass
        keep = basis.n - frequency_cut(basis.n)
        bound_row = {
            't': t,
            'abs_error': absolute_l2_error(spectral, problem.analytic, t),
            'freq': snap.frequency,
            'field_norm': spectral.norm(),
            'analytic_norm': analytic_norm(spectral, problem.analytic, t),
            'analytic_tail': analytic_tail_norm(problem.analytic, t, basis, keep),
        }
        measured = [bound_row[key] for key in ('abs_error', 'field_norm', 'analytic_norm', 'analytic_tail')]
        if not np.all(np.isfinite(measured)):
            raise NumericalError(f"non-finite error measure at t={t:.6g} (N={basis.n})")
        rec.bound_rows.append(bound_row)
    rec.rows.append({
        't': t,
        'rel_error': rel_error,
        'beta': basis.beta,
        'x0': basis.x0,
        'n': basis.n,
        'freq': snap.frequency,
        'ext_left': snap.left_exterior,
        'ext_right': snap.right_exterior,
        'e_scale': rec.totals.e_scale,
        'e_move': rec.totals.e_move,
        'e_coarsen': rec.totals.e_coarsen,
    })


def run(config: RunConfig, keep_transfers: bool = False) -> RunRecord:
    """Initialize by collocation, then step, adapt and ledger until the horizon.

    A numerical failure ends the run early with status 'numerical_failure';
    whatever was logged so far is kept (and written when output_path is set).
    """
    problem, basis, adaptive = config.resolve()
    steps = problem.steps_for(problem.dt, problem.horizon)
    rec = RunRecord(config)
    started = time.perf_counter()
    logger.info(f"Running {problem.name}: {steps} steps of dt={problem.dt}, "
                f"basis beta={basis.beta} x0={basis.x0} N={basis.n}, moving={adaptive.move_mode}")

    spectral = analyze(problem.initial(collocation_points(basis)), basis)
    controller = AdaptiveController(adaptive, spectral)
    propagator = Propagator(problem.form, spectral.basis, problem.dt, config.gl_order)
    _log_row(rec, problem, spectral, 0.0)

    try:
        for k in range(1, steps + 1):
            t = k * problem.dt
            spectral = propagator.advance(spectral, (k - 1) * problem.dt, problem.source)
            if not np.all(np.isfinite(spectral.coeffs)):
                raise NumericalError(f"non-finite coefficients at t={t:.6g}")
            spectral, events = controller.step(spectral, t)
            for event in events:
                rec.totals = record(event, rec.totals)
            rec.events.extend(events)
            if keep_transfers:
                rec.transfers.extend(controller.last_transfers)
            if spectral.basis != propagator.basis:
                propagator = Propagator(problem.form, spectral.basis, problem.dt, config.gl_order)
            rec.steps = k
            rec.final_field = spectral
            if k % config.log_every == 0 or k == steps:
                _log_row(rec, problem, spectral, t)
        rec.status = 'success'
    except NumericalError as e:
        rec.status = 'numerical_failure'
        rec.error = str(e)
        logger.error(f"Run aborted after {rec.steps} steps: {e}")
    finally:
        rec.wall_time = time.perf_counter() - started
        if rec.final_field is None:
            rec.final_field = spectral

    logger.info(f"Finished {problem.name}: status={rec.status}, final error={rec.final_error:.3e}, "
                f"events={len(rec.events)}, {rec.wall_time:.1f}s")
    if config.output_path:
        rec.write(config.output_path)
    return rec


def _run_cell(config: RunConfig) -> Tuple[Optional[RunRecord], Optional[str]]:
    try:
        rec = run(config)
    except (ConfigError, ValueError) as e:
        return None, str(e)
    if not rec.ok:
        return rec, rec.error
    return rec, None


def _summary_row(parameter: str, value, rec: Optional[RunRecord], error: Optional[str]) -> Dict:
    basis = rec.final_basis if rec is not None else None
    return {
        'parameter': parameter,
        'value': value,
        'status': 'success' if error is None else 'failed',
        'final_error': rec.final_error if rec is not None else float('nan'),
        'final_beta': basis.beta if basis else float('nan'),
        'final_x0': basis.x0 if basis else float('nan'),
        'final_n': basis.n if basis else -1,
        'events': len(rec.events) if rec is not None else 0,
        'error': error,
    }


def sweep(template: RunConfig, parameter: str, values: Sequence[float],
          workers: Optional[int] = None) -> Tuple[List[Optional[RunRecord]], pd.DataFrame]:
    """One run per value of a single controller parameter, fanned out over processes."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"cannot sweep '{parameter}'; choose from {SWEEP_PARAMETERS}")
    _, _, base_adaptive = template.resolve()
    configs = []
    for value in values:
        out = None
        if template.output_path:
            out = str(Path(template.output_path) / f"{parameter}={value}")
        configs.append(replace(template, adaptive=replace(base_adaptive, **{parameter: value}),
                               output_path=out))

    workers = Config.SWEEP_WORKERS if workers is None else workers
    if workers <= 1 or len(configs) == 1 or template.custom_problem is not None:
        results = [_run_cell(config) for config in configs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            results = list(pool.map(_run_cell, configs))

    rows = []
    for value, (rec, error) in zip(values, results):
        if error is not None:
            logger.warning(f"Sweep cell {parameter}={value} failed: {error}")
        rows.append(_summary_row(parameter, value, rec, error))
    table = pd.DataFrame(rows)
    if template.output_path:
        Path(template.output_path).mkdir(parents=True, exist_ok=True)
        table.to_csv(Path(template.output_path) / f"sweep_{parameter}.csv", index=False)
    return [rec for rec, _ in results], table


def moving_comparison_config(base: RunConfig) -> RunConfig:
    """Base config with the travelling-wave moving settings."""
    problem = base.problem if base.problem == 'custom' else 'example2'
    adaptive = replace(base.adaptive or AdaptiveConfig(), mu=1.0005, delta=0.0005, d_max=0.2,
                       enable_scale=False, enable_order=False)
    return replace(base, problem=problem, adaptive=adaptive,
                   initial_basis=BasisParams(1.2, 0.0, 24))


def compare_moving_modes(base: RunConfig,
                         workers: Optional[int] = None) -> Tuple[Dict[str, RunRecord], pd.DataFrame]:
    """Run the off/left/right/both moving modes on the same problem."""
    config = moving_comparison_config(base)
    configs = []
    for mode in MOVE_MODES:
        out = str(Path(config.output_path) / mode) if config.output_path else None
        configs.append(replace(config, adaptive=config.adaptive.with_move_mode(mode), output_path=out))

    workers = Config.SWEEP_WORKERS if workers is None else workers
    if workers <= 1 or config.custom_problem is not None:
        records = [run(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            records = list(pool.map(run, configs))

    table = pd.DataFrame([{
        'mode': mode,
        'status': rec.status,
        'final_error': rec.final_error,
        'max_error': float(np.nanmax(rec.to_frame()['rel_error'])) if rec.rows else float('nan'),
        'final_x0': rec.final_basis.x0,
        'moves': sum(1 for e in rec.events if e.kind.value.startswith('Move')),
        'e_move': rec.totals.e_move,
    } for mode, rec in zip(MOVE_MODES, records)])
    if config.output_path:
        Path(config.output_path).mkdir(parents=True, exist_ok=True)
        table.to_csv(Path(config.output_path) / 'moving_modes.csv', index=False)
    return dict(zip(MOVE_MODES, records)), table


def _number(key: str, text, kind=float):
    try:
        value = kind(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {text!r}")
    return value


def build_run_config(values: Mapping[str, object]) -> RunConfig:
    """RunConfig from dotted keys; anything absent keeps the problem's defaults."""
    problem_name = str(values.get('problem', 'example1'))
    problem = get_problem(problem_name)

    basis = problem.basis
    basis_updates = {}
    for key, kind in (('beta', float), ('x0', float), ('n', int)):
        dotted = f'initial_basis.{key}'
        if dotted in values:
            basis_updates[key] = _number(dotted, values[dotted], kind)
    try:
        basis = replace(basis, **basis_updates)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    adaptive_updates = {}
    for key in _FLOAT_KEYS:
        if f'adaptive.{key}' in values:
            adaptive_updates[key] = _number(f'adaptive.{key}', values[f'adaptive.{key}'])
    if 'adaptive.n_max' in values:
        adaptive_updates['n_max'] = _number('adaptive.n_max', values['adaptive.n_max'], int)
    for key in _BOOL_KEYS:
        if f'adaptive.{key}' in values:
            adaptive_updates[key] = parse_bool(values[f'adaptive.{key}'])
    if 'adaptive.transfer' in values:
        adaptive_updates['transfer'] = str(values['adaptive.transfer'])
    adaptive = replace(problem.adaptive, **adaptive_updates)
    if 'adaptive.move_mode' in values:
        adaptive = adaptive.with_move_mode(str(values['adaptive.move_mode']))

    return RunConfig(
        problem=problem_name,
        initial_basis=basis,
        adaptive=adaptive.validate(),
        dt=_number('dt', values['dt']) if 'dt' in values else None,
        t_final=_number('t_final', values['t_final']) if 't_final' in values else None,
        gl_order=_number('gl_order', values.get('gl_order', Config.DEFAULT_GL_ORDER), int),
        output_path=str(values['output_path']) if values.get('output_path') else None,
        log_every=_number('log_every', values.get('log_every', 1), int),
    )


# flag dest -> dotted run-config key
_FLAG_KEYS = {
    'problem': 'problem', 'beta': 'initial_basis.beta', 'x0': 'initial_basis.x0', 'n': 'initial_basis.n',
    'dt': 'dt', 't_final': 't_final', 'q': 'adaptive.q', 'nu': 'adaptive.nu', 'delta': 'adaptive.delta',
    'mu': 'adaptive.mu', 'eta': 'adaptive.eta', 'eta0': 'adaptive.eta0', 'gamma': 'adaptive.gamma',
    'd_max': 'adaptive.d_max', 'n_max': 'adaptive.n_max', 'beta_min': 'adaptive.beta_min',
    'beta_max': 'adaptive.beta_max', 'gl_order': 'gl_order', 'move_mode': 'adaptive.move_mode',
    'transfer': 'adaptive.transfer', 'out': 'output_path', 'log_every': 'log_every',
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='flat key=value run-config file')
    common.add_argument('--problem', choices=['example1', 'example2'])
    for flag in ('--beta', '--x0', '--dt', '--t-final', '--q', '--nu', '--delta', '--mu', '--eta',
                 '--eta0', '--gamma', '--d-max', '--beta-min', '--beta-max'):
        common.add_argument(flag, type=float)
    for flag in ('--n', '--n-max', '--gl-order', '--log-every'):
        common.add_argument(flag, type=int)
    common.add_argument('--disable-move', action='store_true')
    common.add_argument('--disable-scale', action='store_true')
    common.add_argument('--disable-order', action='store_true')
    common.add_argument('--move-mode', choices=MOVE_MODES)
    common.add_argument('--transfer', choices=['projection', 'interpolation'])
    common.add_argument('--out', help='output directory')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(description='Adaptive generalized-Hermite spectral solver experiments')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('run', parents=[common], help='run one problem')
    sweep_parser = commands.add_parser('sweep', parents=[common], help='vary one controller parameter')
    sweep_parser.add_argument('--param', required=True, choices=SWEEP_PARAMETERS)
    sweep_parser.add_argument('--values', required=True, type=float, nargs='+')
    sweep_parser.add_argument('--workers', type=int)
    compare_parser = commands.add_parser('compare', parents=[common], help='compare moving modes')
    compare_parser.add_argument('--workers', type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """File values first, then flags on top."""
    values: Dict[str, object] = dict(load_config_file(args.config)) if args.config else {}
    for dest, key in _FLAG_KEYS.items():
        flag_value = getattr(args, dest, None)
        if flag_value is not None:
            values[key] = flag_value
    if args.disable_move:
        values['adaptive.move_mode'] = 'off'
    if args.disable_scale:
        values['adaptive.enable_scale'] = False
    if args.disable_order:
        values['adaptive.enable_order'] = False
    return build_run_config(values)


def setup_logging(name: str = 'experiments') -> Path:
    settings = Config.get_logging_config()
    log_dir = settings['log_dir']
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / f'{name}_{datetime.now().strftime("%Y%m%d_%H%M%S")}.log'
    logging.basicConfig(
        level=settings['level'],
        format=settings['format'],
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stdout)
        ]
    )
    return log_file


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.command)
    try:
        config = config_from_args(args)
        if args.command == 'run':
            rec = run(config)
            if not rec.ok:
                print(f"⚠️  Run stopped early: {rec.error}")
                return EXIT_NUMERICAL
            print(f"✓ {config.problem}: final relative error {rec.final_error:.3e}, "
                  f"final basis {rec.final_basis.to_dict()}, {len(rec.events)} events")
        elif args.command == 'sweep':
            _, table = sweep(config, args.param, args.values, args.workers)
            print(table.to_string(index=False))
        else:
            _, table = compare_moving_modes(config, args.workers)
            print(table.to_string(index=False))
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
