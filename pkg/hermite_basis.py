#!/usr/bin/env python3
"""
Generalized Hermite Basis
Hermite polynomials and functions with scaling factor and displacement,
Gauss-Hermite quadrature, and point-value <-> coefficient transforms.

Basis functions follow the unnormalized convention
    H_i^beta(x - x0) = H_i(beta (x - x0)) exp(-(beta (x - x0))^2 / 2) / sqrt(2^i i!)
so every basis function has squared L2 norm sqrt(pi) / beta.
"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

logger = logging.getLogger(__name__)

SQRT_PI = np.sqrt(np.pi)
RESCALE_AT = 1e100


class NumericalError(RuntimeError):
    """Raised when a numerical kernel fails to converge."""


@dataclass(frozen=True)
class BasisParams:
    """The triple (beta, x0, n) identifying a generalized Hermite basis."""

    beta: float
    x0: float
    n: int

    def __post_init__(self):
        beta = float(self.beta)
        if not np.isfinite(beta) or beta <= 0:
            raise ValueError(f"beta must be a positive finite number, got {self.beta!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")
        x0 = float(self.x0)
        if not np.isfinite(x0):
            raise ValueError(f"x0 must be finite, got {self.x0!r}")
        # +0.0 canonicalizes a negative zero so equality and hashing agree
        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'x0', x0 + 0.0)
        object.__setattr__(self, 'n', int(self.n))

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def norm_sq(self) -> float:
        """Squared L2 norm shared by every basis function."""
        return SQRT_PI / self.beta

    def with_beta(self, beta: float) -> 'BasisParams':
        return replace(self, beta=beta)

    def with_x0(self, x0: float) -> 'BasisParams':
        return replace(self, x0=x0)

    def with_n(self, n: int) -> 'BasisParams':
        return replace(self, n=n)

    def to_dict(self) -> dict:
        return {'beta': self.beta, 'x0': self.x0, 'n': self.n}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-xi^2)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    function_weights: np.ndarray

    def map_to(self, basis: BasisParams) -> np.ndarray:
        """Physical locations x0 + xi / beta of the nodes."""
        return basis.x0 + self.nodes / basis.beta


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients u_0..u_N of an expansion in a generalized Hermite basis."""

    basis: BasisParams
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        if coeffs.shape[0] != self.basis.size:
            raise ValueError(
                f"expected {self.basis.size} coefficients for order {self.basis.n}, "
                f"got {coeffs.shape[0]}")
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def zeros(cls, basis: BasisParams) -> 'SpectralField':
        return cls(basis, np.zeros(basis.size, dtype=complex))

    @classmethod
    def unit(cls, basis: BasisParams, i: int) -> 'SpectralField':
        coeffs = np.zeros(basis.size, dtype=complex)
        coeffs[i] = 1.0
        return cls(basis, coeffs)

    def with_coeffs(self, coeffs) -> 'SpectralField':
        return SpectralField(self.basis, coeffs)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2) * self.basis.norm_sq)

    def norm(self) -> float:
        """L2 norm by Parseval."""
        return float(np.sqrt(self.norm_sq()))

    def __call__(self, xs) -> np.ndarray:
        return synthesize(self, xs)


def hermite_polynomial(n: int, x: float) -> float:
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"polynomial degree must be nonnegative, got {n}")
    h_prev, h = 1.0, 2.0 * x
    if n == 0:
        return h_prev
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def hermite_function_table(n: int, y) -> np.ndarray:
    """Values of the normalized functions H_0..H_n at points y, shape (len(y), n + 1).

    Uses H_{k+1} = y sqrt(2/(k+1)) H_k - sqrt(k/(k+1)) H_{k-1} with H_0 = exp(-y^2/2),
    so no factorial is ever formed.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    table = np.empty((y.shape[0], n + 1))
    table[:, 0] = np.exp(-0.5 * y * y)
    if n >= 1:
        table[:, 1] = np.sqrt(2.0) * y * table[:, 0]
    for k in range(1, n):
        table[:, k + 1] = (y * np.sqrt(2.0 / (k + 1)) * table[:, k]
                           - np.sqrt(k / (k + 1)) * table[:, k - 1])
    return table


def hermite_function(i: int, basis: BasisParams, x: float) -> float:
    """Value of the i-th generalized Hermite function of `basis` at x."""
    if not 0 <= i <= basis.n:
        raise ValueError(f"basis index {i} outside 0..{basis.n}")
    y = basis.beta * (float(x) - basis.x0)
    return float(hermite_function_table(i, [y])[0, i])


def _log_christoffel_sum(n: int, xi: np.ndarray) -> np.ndarray:
    """log of sum_{i<=n} P_i(xi)^2 for the normalized polynomial parts P_i = H_i exp(xi^2 / 2).

    The recurrence is rescaled whenever it grows past RESCALE_AT, carrying the
    exponent separately, so large nodes neither overflow nor underflow.
    """
    p_prev = np.zeros_like(xi)
    p = np.ones_like(xi)
    total = np.ones_like(xi)
    log_scale = np.zeros_like(xi)
    for k in range(n):
        p_prev, p = p, xi * np.sqrt(2.0 / (k + 1)) * p - np.sqrt(k / (k + 1)) * p_prev
        total += p * p
        factor = np.where(np.abs(p) > RESCALE_AT, 1.0 / RESCALE_AT, 1.0)
        p *= factor
        p_prev *= factor
        total *= factor * factor
        log_scale -= np.log(factor)
    return np.log(total) + 2.0 * log_scale


@lru_cache(maxsize=128)
def gauss_hermite_rule(m: int) -> QuadratureRule:
    """m-point Gauss-Hermite rule by the Golub-Welsch eigenvalue method."""
    if m < 1:
        raise ValueError(f"quadrature order must be at least 1, got {m}")
    if m == 1:
        nodes, weights = np.zeros(1), np.full(1, SQRT_PI)
        function_weights = weights.copy()
        for arr in (nodes, weights, function_weights):
            arr.setflags(write=False)
        return QuadratureRule(order=1, nodes=nodes, weights=weights, function_weights=function_weights)

    diagonal = np.zeros(m)
    off_diagonal = np.sqrt(np.arange(1, m) / 2.0)
    try:
        nodes, vectors = eigh_tridiagonal(diagonal, off_diagonal)
    except LinAlgError as e:
        raise NumericalError(f"Golub-Welsch eigen-solve failed for m={m}: {e}") from e
    if not np.all(np.isfinite(nodes)):
        raise NumericalError(f"Golub-Welsch produced non-finite nodes for m={m}")

    weights = SQRT_PI * vectors[0, :] ** 2
    # Symmetrize +/- pairs
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    # Christoffel form of w * exp(xi^2), assembled in log space
    function_weights = SQRT_PI * np.exp(nodes * nodes - _log_christoffel_sum(m - 1, nodes))
    if not np.all(np.isfinite(function_weights) & (function_weights > 0)):
        raise NumericalError(f"non-finite Gauss-Hermite function weights for m={m}")

    for arr in (nodes, weights, function_weights):
        arr.setflags(write=False)
    logger.debug(f"Built {m}-point Gauss-Hermite rule, max node {nodes[-1]:.6g}")
    return QuadratureRule(order=m, nodes=nodes, weights=weights, function_weights=function_weights)


@lru_cache(maxsize=256)
def node_table(m: int, n: int) -> np.ndarray:
    """Read-only table of H_0..H_n at the nodes of the m-point rule."""
    table = hermite_function_table(n, gauss_hermite_rule(m).nodes)
    table.setflags(write=False)
    return table


def collocation_points(basis: BasisParams) -> np.ndarray:
    """Collocation points x0 + xi_k / beta of the (N+1)-node rule, ascending."""
    return gauss_hermite_rule(basis.size).map_to(basis)


def synthesize(field: SpectralField, xs) -> np.ndarray:
    """Evaluate the expansion at xs with one recurrence sweep per point."""
    xs = np.asarray(xs, dtype=float)
    shape = xs.shape
    y = field.basis.beta * (xs.reshape(-1) - field.basis.x0)
    coeffs = field.coeffs
    h_prev = np.exp(-0.5 * y * y)
    total = coeffs[0] * h_prev
    if field.basis.n >= 1:
        h = np.sqrt(2.0) * y * h_prev
        total = total + coeffs[1] * h
        for k in range(1, field.basis.n):
            h_prev, h = h, y * np.sqrt(2.0 / (k + 1)) * h - np.sqrt(k / (k + 1)) * h_prev
            total = total + coeffs[k + 1] * h
    return np.asarray(total, dtype=complex).reshape(shape)


def analyze(values_at_collocation: Sequence[complex], basis: BasisParams) -> SpectralField:
    """Interpolating expansion through values sampled at collocation_points(basis)."""
    values = np.asarray(values_at_collocation, dtype=complex).reshape(-1)
    if values.shape[0] != basis.size:
        raise ValueError(
            f"expected {basis.size} collocation values for order {basis.n}, got {values.shape[0]}")
    rule = gauss_hermite_rule(basis.size)
    table = node_table(basis.size, basis.n)
    # Discrete orthogonality of the (N+1)-point rule: sum_k w_k H_i H_j = sqrt(pi) delta_ij
    coeffs = table.T @ (rule.function_weights * values) / SQRT_PI
    return SpectralField(basis, coeffs)


def main():
    """Print the collocation points of a small basis."""
    basis = BasisParams(beta=1.0, x0=0.0, n=24)
    points = collocation_points(basis)
    print(f"✓ {basis.size} collocation points for beta={basis.beta}, x0={basis.x0}")
    print(f"  x_L = {points[basis.n // 3]:.6f}, x_R = {points[(2 * basis.n + 2) // 3]:.6f}")


if __name__ == '__main__':
    main()
