#!/usr/bin/env python3
"""
Master script to reproduce the parameter studies
This script:
1. Sweeps q, nu, delta and mu on Example 1 with the expansion order fixed
2. Sweeps gamma, eta and eta0 on Example 1 with p-adaptivity on
3. Compares the four moving modes on Example 2
4. Writes reproduction_summary.json next to the tables

Use --quick for the reduced step size and horizon.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime
from pathlib import Path

# Project root holds the solver modules
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import Config  # noqa: E402

# Setup logging first
log_dir = Path(Config.LOG_DIR)
log_dir.mkdir(parents=True, exist_ok=True)

log_file = log_dir / f'reproduce_{datetime.now().strftime("%Y%m%d_%H%M%S")}.log'
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(log_file),
        logging.StreamHandler(sys.stdout)
    ]
)

logger = logging.getLogger(__name__)

from adaptive_controller import AdaptiveConfig  # noqa: E402
from experiments_cli import RunConfig, compare_moving_modes, sweep  # noqa: E402

# Scaling and moving studies hold N fixed; order studies switch p-adaptivity on
SCALING_MOVING_SWEEPS = {
    'q': [0.8, 0.9, 0.95, 0.99, 0.995],
    'nu': [1.01, 1.02, 1.1, 1.5, 2.0],
    'delta': [1e-5, 1e-4, 1e-3, 5e-3],
    'mu': [1.00001, 1.00005, 1.0005, 1.005, 1.05],
}
ORDER_SWEEPS = {
    'gamma': [1.0, 1.02, 1.05, 1.1, 1.2],
    'eta': [1.02, 1.05, 1.1, 1.2, 1.5],
    'eta0': [1.005, 1.01, 1.02, 1.03, 1.05],
}


class ExperimentReproducer:
    def __init__(self, output_dir: Path, quick: bool = False, workers=None):
        self.start_time = datetime.now()
        self.output_dir = Path(output_dir)
        self.quick = quick
        self.workers = workers
        self.errors = []
        self.warnings = []
        self.tables = []

    def _template(self, problem: str, adaptive: AdaptiveConfig = None) -> RunConfig:
        timing = {'dt': 2e-3, 't_final': 1.0} if self.quick else {}
        return RunConfig(problem=problem, adaptive=adaptive, log_every=50, **timing)

    def _run_sweeps(self, sweeps, adaptive: AdaptiveConfig, label: str) -> bool:
        ok = True
        for parameter, values in sweeps.items():
            out = self.output_dir / label
            template = replace(self._template('example1', adaptive), output_path=str(out))
            try:
                _, table = sweep(template, parameter, values, self.workers)
            except Exception as e:
                error_msg = f"Error sweeping {parameter}: {str(e)}"
                logger.error(error_msg)
                self.errors.append(error_msg)
                ok = False
                continue
            failed = table[table['status'] == 'failed']
            for _, row in failed.iterrows():
                self.warnings.append(f"{parameter}={row['value']} failed: {row['error']}")
            self.tables.append(str(out / f"sweep_{parameter}.csv"))
            logger.info(f"✓ {parameter}: {len(values) - len(failed)}/{len(values)} runs succeeded")
        return ok

    def sweep_scaling_and_moving(self):
        """Vary q, nu, delta, mu one at a time"""
        logger.info("=" * 80)
        logger.info("STEP 1: SCALING AND MOVING PARAMETERS (EXAMPLE 1)")
        logger.info("=" * 80)
        return self._run_sweeps(SCALING_MOVING_SWEEPS, AdaptiveConfig(enable_order=False), 'scaling_moving')

    def sweep_order_parameters(self):
        """Vary gamma, eta, eta0 one at a time"""
        logger.info("\n" + "=" * 80)
        logger.info("STEP 2: p-ADAPTIVE PARAMETERS (EXAMPLE 1)")
        logger.info("=" * 80)
        return self._run_sweeps(ORDER_SWEEPS, AdaptiveConfig(), 'order')

    def compare_moving(self):
        """Run the off/left/right/both moving modes"""
        logger.info("\n" + "=" * 80)
        logger.info("STEP 3: MOVING MODES (EXAMPLE 2)")
        logger.info("=" * 80)

        out = self.output_dir / 'moving_modes'
        try:
            records, table = compare_moving_modes(
                replace(self._template('example2'), output_path=str(out)), self.workers)
        except Exception as e:
            error_msg = f"Error comparing moving modes: {str(e)}"
            logger.error(error_msg)
            self.errors.append(error_msg)
            return False
        self.tables.append(str(out / 'moving_modes.csv'))
        best = table.loc[table['final_error'].idxmin(), 'mode']
        if best != 'both':
            self.warnings.append(f"bidirectional moving was not the most accurate mode (best: {best})")
        logger.info(f"✓ Moving modes compared; smallest final error with '{best}'")
        return True

    def create_summary(self):
        """Create a summary of the reproduction"""
        end_time = datetime.now()
        duration = (end_time - self.start_time).total_seconds()

        summary = {
            'timestamp': end_time.isoformat(),
            'duration_seconds': duration,
            'mode': 'quick' if self.quick else 'full',
            'status': 'success' if not self.errors else 'partial',
            'errors': self.errors,
            'warnings': self.warnings,
            'tables': self.tables,
            'log_file': str(log_file),
        }

        self.output_dir.mkdir(parents=True, exist_ok=True)
        summary_file = self.output_dir / 'reproduction_summary.json'
        with open(summary_file, 'w', encoding='utf-8') as f:
            json.dump(summary, f, indent=2, ensure_ascii=False)

        logger.info("\n" + "=" * 80)
        logger.info("REPRODUCTION SUMMARY")
        logger.info("=" * 80)
        logger.info(f"Status: {summary['status']}")
        logger.info(f"Duration: {duration:.2f} seconds")
        logger.info(f"Errors: {len(self.errors)}")
        logger.info(f"Warnings: {len(self.warnings)}")
        logger.info(f"Summary saved to: {summary_file}")

        return summary

    def run_all(self):
        """Run every study"""
        logger.info("=" * 80)
        logger.info("EXPERIMENT REPRODUCTION STARTED")
        logger.info(f"Time: {self.start_time.strftime('%Y-%m-%d %H:%M:%S')}")
        logger.info("=" * 80)

        results = {
            'scaling_moving': self.sweep_scaling_and_moving(),
            'order': self.sweep_order_parameters(),
            'moving_modes': self.compare_moving(),
        }

        self.create_summary()

        if all(results.values()):
            logger.info("\n✅ ALL STUDIES COMPLETED SUCCESSFULLY")
            return 0
        else:
            logger.warning("\n⚠️  REPRODUCTION COMPLETED WITH ERRORS")
            return 1


def main():
    """Main entry point"""
    parser = argparse.ArgumentParser(description='Reproduce the parameter studies')
    parser.add_argument('--quick', action='store_true', help='dt=2e-3 and T=1 instead of the full runs')
    parser.add_argument('--out', default=str(Path(Config.OUTPUT_DIR) / 'reproduction'))
    parser.add_argument('--workers', type=int)
    args = parser.parse_args()

    reproducer = ExperimentReproducer(Path(args.out), quick=args.quick, workers=args.workers)
    exit_code = reproducer.run_all()
    sys.exit(exit_code)


if __name__ == '__main__':
    main()
