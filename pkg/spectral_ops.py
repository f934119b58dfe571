#!/usr/bin/env python3
"""
Spectral Operators
Basis changes (Galerkin projection, interpolation), differentiation,
multiplication by x, and tail norms on generalized Hermite expansions.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from hermite_basis import (
    SQRT_PI,
    BasisParams,
    SpectralField,
    analyze,
    collocation_points,
    gauss_hermite_rule,
    hermite_function_table,
    node_table,
    synthesize,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OperatorReport:
    """Bookkeeping for one basis change."""

    source_basis: BasisParams
    target_basis: BasisParams
    discarded_norm: float


@lru_cache(maxsize=64)
def derivative_matrix(n: int) -> np.ndarray:
    """(n+2) x (n+1) coefficient map of d/dy on H_0..H_n (multiply by beta for d/dx)."""
    d = np.zeros((n + 2, n + 1))
    k = np.arange(n + 1)
    d[k[1:] - 1, k[1:]] = np.sqrt(k[1:] / 2.0)
    d[k + 1, k] = -np.sqrt((k + 1) / 2.0)
    d.setflags(write=False)
    return d


@lru_cache(maxsize=64)
def position_matrix(n: int) -> np.ndarray:
    """(n+2) x (n+1) coefficient map of multiplication by y on H_0..H_n."""
    p = np.zeros((n + 2, n + 1))
    k = np.arange(n + 1)
    p[k[1:] - 1, k[1:]] = np.sqrt(k[1:] / 2.0)
    p[k + 1, k] = np.sqrt((k + 1) / 2.0)
    p.setflags(write=False)
    return p


def resize(field: SpectralField, n: int) -> SpectralField:
    """Zero-pad or truncate to order n in the same (beta, x0)."""
    coeffs = np.zeros(n + 1, dtype=complex)
    keep = min(n, field.basis.n) + 1
    coeffs[:keep] = field.coeffs[:keep]
    return SpectralField(field.basis.with_n(n), coeffs)


def tail_norm(field: SpectralField, keep: int) -> float:
    """L2 norm of the modes above index `keep`."""
    if not 0 <= keep <= field.basis.n:
        raise ValueError(f"keep={keep} outside 0..{field.basis.n}")
    tail = field.coeffs[keep + 1:]
    return float(np.sqrt(np.sum(np.abs(tail) ** 2) * field.basis.norm_sq))


def _cross_inner_products(field: SpectralField, target: BasisParams) -> np.ndarray:
    """(field, H_i^target) for i = 0..target.n.

    The product of a source and a target function is a polynomial times a single
    Gaussian after completing the square, so a Gauss-Hermite rule in the combined
    variable integrates it exactly.
    """
    source = field.basis
    bs2, bt2 = source.beta ** 2, target.beta ** 2
    c = bs2 + bt2
    center = (bs2 * source.x0 + bt2 * target.x0) / c
    scale = np.sqrt(2.0 / c)
    rule = gauss_hermite_rule(source.n + target.n + 2)
    xs = center + scale * rule.nodes
    values = synthesize(field, xs)
    table = hermite_function_table(target.n, target.beta * (xs - target.x0))
    return scale * (table.T @ (rule.function_weights * values))


def project(field: SpectralField, target: BasisParams) -> Tuple[SpectralField, OperatorReport]:
    """L2-orthogonal projection onto the span of the target basis."""
    source = field.basis
    if target == source:
        return field, OperatorReport(source, target, 0.0)
    if target.beta == source.beta and target.x0 == source.x0:
        discarded = tail_norm(field, target.n) if target.n < source.n else 0.0
        return resize(field, target.n), OperatorReport(source, target, discarded)

    coeffs = _cross_inner_products(field, target) / target.norm_sq
    projected = SpectralField(target, coeffs)
    discarded = np.sqrt(max(field.norm_sq() - projected.norm_sq(), 0.0))
    return projected, OperatorReport(source, target, float(discarded))


def interpolate(field: SpectralField, target: BasisParams) -> SpectralField:
    """Collocation transfer: match the field at the target's collocation points."""
    return analyze(synthesize(field, collocation_points(target)), target)


def differentiate(field: SpectralField) -> SpectralField:
    """Exact derivative, one order higher in the same (beta, x0)."""
    basis = field.basis
    coeffs = basis.beta * (derivative_matrix(basis.n) @ field.coeffs)
    return SpectralField(basis.with_n(basis.n + 1), coeffs)


def multiply_by_x(field: SpectralField, origin: float = 0.0) -> SpectralField:
    """Exact product (x - origin) * U, one order higher in the same (beta, x0)."""
    basis = field.basis
    coeffs = position_matrix(basis.n) @ field.coeffs / basis.beta
    coeffs[:-1] += (basis.x0 - origin) * field.coeffs
    return SpectralField(basis.with_n(basis.n + 1), coeffs)


def derivative_norm(field: SpectralField) -> float:
    return differentiate(field).norm()


def x_weighted_deriv_norm(field: SpectralField, origin: float = 0.0) -> float:
    """||(x - origin) dU/dx|| by exact coefficient maps and Parseval."""
    return multiply_by_x(differentiate(field), origin).norm()


def project_function(func: Callable[[np.ndarray], np.ndarray], basis: BasisParams,
                     order: Optional[int] = None) -> SpectralField:
    """Galerkin coefficients of an arbitrary function by Gauss-Hermite quadrature.

    Quadrature runs in the basis' own scale; the default rule has 4(N+1) nodes.
    """
    m = order or 4 * basis.size
    rule = gauss_hermite_rule(m)
    values = np.asarray(func(rule.map_to(basis)), dtype=complex)
    coeffs = node_table(m, basis.n).T @ (rule.function_weights * values) / SQRT_PI
    return SpectralField(basis, coeffs)


def quadrature_norm(func: Callable[[np.ndarray], np.ndarray], basis: BasisParams,
                    order: Optional[int] = None) -> float:
    """L2 norm of an arbitrary function by quadrature in the basis' scale."""
    m = order or 4 * basis.size
    rule = gauss_hermite_rule(m)
    values = np.asarray(func(rule.map_to(basis)), dtype=complex)
    return float(np.sqrt(np.sum(rule.function_weights * np.abs(values) ** 2) / basis.beta))
