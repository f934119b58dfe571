#!/usr/bin/env python3
"""
Posterior Error Ledger
Accumulates the scaling, moving and coarsening error terms from the event log
and checks them against measured errors when an analytic solution is known.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Mapping

import numpy as np
import pandas as pd

from adaptive_controller import AdaptationEvent, BasisTransfer, EventKind
from hermite_basis import synthesize
from spectral_ops import quadrature_norm

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
LOWER_BOUND_SLACK = 1e-8

_TOTAL_FOR_KIND = {
    EventKind.SCALE_UP: 'e_scale',
    EventKind.SCALE_DOWN: 'e_scale',
    EventKind.MOVE_RIGHT: 'e_move',
    EventKind.MOVE_LEFT: 'e_move',
    EventKind.COARSEN: 'e_coarsen',
}


@dataclass(frozen=True)
class LedgerTotals:
    e_scale: float = 0.0
    e_move: float = 0.0
    e_coarsen: float = 0.0
    counts: Mapping[str, int] = field(default_factory=lambda: {kind.value: 0 for kind in EventKind})

    @property
    def adaptive_total(self) -> float:
        return self.e_scale + self.e_move + self.e_coarsen

    def record(self, event: AdaptationEvent) -> 'LedgerTotals':
        return record(event, self)

    def summary(self, measured: float) -> Dict:
        """Totals next to the measured error; e0 is only the leftover residual."""
        return {
            'e_scale': self.e_scale,
            'e_move': self.e_move,
            'e_coarsen': self.e_coarsen,
            'adaptive_total': self.adaptive_total,
            'measured_error': measured,
            'e0_residual': measured - self.adaptive_total,
            'counts': dict(self.counts),
        }


def record(event: AdaptationEvent, totals: LedgerTotals) -> LedgerTotals:
    """New totals with the event's increment added to its bucket."""
    if event.ledger_increment < 0:
        raise ValueError(f"negative ledger increment {event.ledger_increment} for {event.kind.value}")
    counts = dict(totals.counts)
    counts[event.kind.value] = counts.get(event.kind.value, 0) + 1
    bucket = _TOTAL_FOR_KIND.get(event.kind)
    if bucket is None:
        return replace(totals, counts=counts)
    return replace(totals, counts=counts, **{bucket: getattr(totals, bucket) + event.ledger_increment})


def accumulate(events: Iterable[AdaptationEvent]) -> LedgerTotals:
    totals = LedgerTotals()
    for event in events:
        totals = record(event, totals)
    return totals


@dataclass(frozen=True)
class BoundCheck:
    kind: str
    t: float
    error_before: float
    error_after: float
    ledger_increment: float

    @property
    def jump(self) -> float:
        return self.error_after - self.error_before

    @property
    def passed(self) -> bool:
        return self.jump <= self.ledger_increment + BOUND_SLACK


@dataclass
class BoundReport:
    checks: List[BoundCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[BoundCheck]:
        return [check for check in self.checks if not check.passed]

    def to_frame(self) -> pd.DataFrame:
        columns = ['kind', 't', 'error_before', 'error_after', 'jump', 'ledger_increment', 'passed']
        rows = [{
            'kind': check.kind,
            't': check.t,
            'error_before': check.error_before,
            'error_after': check.error_after,
            'jump': check.jump,
            'ledger_increment': check.ledger_increment,
            'passed': check.passed,
        } for check in self.checks]
        return pd.DataFrame(rows, columns=columns)


def verify_bound(transfers: Iterable[BasisTransfer],
                 analytic: Callable[[np.ndarray, float], np.ndarray]) -> BoundReport:
    """Compare each event's instantaneous error jump with its ledger increment.

    Both errors use one Gauss-Hermite rule in the pre-event basis scale with
    4(N+1) nodes for the larger of the two orders.
    """
    checks = []
    for transfer in transfers:
        event = transfer.event
        t = event.time
        quad_basis = transfer.before.basis
        order = 4 * (max(transfer.before.basis.n, transfer.after.basis.n) + 1)

        def error_of(spectral):
            return quadrature_norm(lambda x: analytic(x, t) - synthesize(spectral, x), quad_basis, order)

        checks.append(BoundCheck(event.kind.value, t, error_of(transfer.before),
                                 error_of(transfer.after), event.ledger_increment))
    report = BoundReport(checks)
    for failure in report.failures:
        logger.warning(f"Bound violated: {failure.kind} at t={failure.t:.6g}, "
                       f"jump {failure.jump:.3e} > increment {failure.ledger_increment:.3e}")
    return report


def frequency_lower_bound_report(rows: Iterable[Mapping]) -> pd.DataFrame:
    """Check e(t) >= F ||U|| - ||(I - pi_{N-M}) u|| row by row.

    Rows need abs_error, freq, field_norm and analytic_tail. Only an undefined
    frequency indicator leaves a row unjudged (judged=False, passed=True); a
    non-finite measurement fails the row.
    """
    records = []
    for row in rows:
        lower = row['freq'] * row['field_norm'] - row['analytic_tail']
        judged = not np.isnan(row['freq'])
        measured = np.all(np.isfinite([row['abs_error'], row['field_norm'], row['analytic_tail']]))
        if not judged:
            passed = True
        elif not measured:
            passed = False
        else:
            passed = bool(row['abs_error'] >= lower - LOWER_BOUND_SLACK)
        records.append({
            't': row['t'],
            'abs_error': row['abs_error'],
            'lower_bound': lower,
            'judged': judged,
            'passed': passed,
        })
    columns = ['t', 'abs_error', 'lower_bound', 'judged', 'passed']
    frame = pd.DataFrame(records, columns=columns).astype({'judged': bool, 'passed': bool})
    if not frame.empty and not frame['passed'].all():
        logger.warning(f"Frequency lower bound violated at {int((~frame['passed']).sum())} logged steps")
    return frame
