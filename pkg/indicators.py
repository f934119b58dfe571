#!/usr/bin/env python3
"""
Adaptive Indicators
Frequency indicator and left/right exterior-error indicators that drive the
scaling, moving and p-adaptive decisions.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from hermite_basis import BasisParams, SpectralField, gauss_hermite_rule, node_table, synthesize
from spectral_ops import differentiate

logger = logging.getLogger(__name__)


class DegenerateIndicatorError(ValueError):
    """The indicator is 0/0 for this field; callers skip the adaptation."""


@dataclass(frozen=True)
class IndicatorSnapshot:
    frequency: float
    right_exterior: float
    left_exterior: float
    x_left: float
    x_right: float
    m_cut: int

    def to_dict(self) -> dict:
        return {
            'freq': self.frequency,
            'ext_right': self.right_exterior,
            'ext_left': self.left_exterior,
            'x_left': self.x_left,
            'x_right': self.x_right,
            'm_cut': self.m_cut,
        }


def frequency_cut(n: int) -> int:
    """Number of trailing modes M = floor(N/3) measured by the frequency indicator."""
    return n // 3


def frequency_from_coeffs(coeffs: np.ndarray, m_cut: Optional[int] = None) -> float:
    """Ratio of the norm of the last m_cut modes to the total norm."""
    n = len(coeffs) - 1
    if n < 3:
        raise ValueError(f"frequency indicator needs N >= 3, got N={n}")
    m_cut = frequency_cut(n) if m_cut is None else m_cut
    power = np.abs(coeffs) ** 2
    total = np.sum(power)
    if total == 0.0:
        raise DegenerateIndicatorError("frequency indicator of a zero field")
    return float(np.sqrt(np.sum(power[n - m_cut + 1:]) / total))


def frequency_indicator(field: SpectralField) -> float:
    """F(U) = ||(I - pi_{N-M}) U|| / ||U|| with M = floor(N/3)."""
    return frequency_from_coeffs(field.coeffs)


def exterior_bounds(basis: BasisParams) -> Tuple[float, float]:
    """(x_L, x_R): collocation points with 0-based indices floor(N/3) and floor((2N+2)/3)."""
    rule = gauss_hermite_rule(basis.size)
    xi_left = rule.nodes[basis.n // 3]
    xi_right = rule.nodes[(2 * basis.n + 2) // 3]
    return basis.x0 + xi_left / basis.beta, basis.x0 + xi_right / basis.beta


def _derivative_and_norm(field: SpectralField) -> Tuple[SpectralField, float]:
    if field.basis.n < 3:
        raise ValueError(f"exterior-error indicators need N >= 3, got N={field.basis.n}")
    g = differentiate(field)
    g_norm = g.norm()
    if g_norm == 0.0:
        raise DegenerateIndicatorError("exterior-error indicator of a field with zero derivative")
    return g, g_norm


def exterior_error_indicators(field: SpectralField) -> Tuple[float, float]:
    """(E_R, E_L): share of ||dU/dx|| beyond x_R and before x_L.

    Restricted norms sum Gauss-Hermite contributions of a 2(N+2)-node rule at the
    nodes inside each region; the denominator is exact by Parseval.
    """
    g, g_norm = _derivative_and_norm(field)
    basis = field.basis
    m = 2 * (basis.n + 2)
    rule = gauss_hermite_rule(m)
    xs = rule.map_to(basis)
    values = node_table(m, g.basis.n) @ g.coeffs
    density = rule.function_weights * np.abs(values) ** 2 / basis.beta
    x_left, x_right = exterior_bounds(basis)
    right = np.sqrt(np.sum(density[xs > x_right]))
    left = np.sqrt(np.sum(density[xs < x_left]))
    return float(min(right / g_norm, 1.0)), float(min(left / g_norm, 1.0))


def shifted_exterior_indicators(field: SpectralField, shifts: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Exterior indicators of the field seen from the basis displaced by each shift.

    Row s evaluates the restricted norms on the nodes and bounds of the basis
    centred at x0 + shifts[s]; the field itself is not moved.
    """
    g, g_norm = _derivative_and_norm(field)
    basis = field.basis
    shifts = np.asarray(shifts, dtype=float).reshape(-1, 1)
    rule = gauss_hermite_rule(2 * (basis.n + 2))
    xs = rule.map_to(basis)[np.newaxis, :] + shifts
    density = rule.function_weights * np.abs(synthesize(g, xs)) ** 2 / basis.beta
    x_left, x_right = exterior_bounds(basis)
    right = np.sqrt(np.sum(np.where(xs > x_right + shifts, density, 0.0), axis=1)) / g_norm
    left = np.sqrt(np.sum(np.where(xs < x_left + shifts, density, 0.0), axis=1)) / g_norm
    return np.minimum(right, 1.0), np.minimum(left, 1.0)


def snapshot(field: SpectralField) -> IndicatorSnapshot:
    """All indicators at once; NaN marks an undefined value."""
    try:
        frequency = frequency_indicator(field)
    except DegenerateIndicatorError:
        frequency = float('nan')
    try:
        right, left = exterior_error_indicators(field)
    except DegenerateIndicatorError:
        right = left = float('nan')
    x_left, x_right = exterior_bounds(field.basis)
    return IndicatorSnapshot(
        frequency=frequency,
        right_exterior=right,
        left_exterior=left,
        x_left=x_left,
        x_right=x_right,
        m_cut=frequency_cut(field.basis.n),
    )
