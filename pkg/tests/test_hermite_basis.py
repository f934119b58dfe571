#!/usr/bin/env python3
"""
Tests for the generalized Hermite basis, quadrature and transforms
"""

import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path to import modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from hermite_basis import (  # noqa: E402
    SQRT_PI,
    BasisParams,
    SpectralField,
    analyze,
    collocation_points,
    gauss_hermite_rule,
    hermite_function,
    hermite_function_table,
    hermite_polynomial,
    node_table,
    synthesize,
)


def random_field(rng, basis):
    return SpectralField(basis, rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size))


@pytest.mark.parametrize('m', [1, 2, 3, 5, 8, 12])
def test_rule_integrates_monomials_exactly(m):
    rule = gauss_hermite_rule(m)
    for degree in range(2 * m):
        exact = math.gamma((degree + 1) / 2) if degree % 2 == 0 else 0.0
        approx = float(np.sum(rule.weights * rule.nodes ** degree))
        assert abs(approx - exact) <= 1e-10 * max(exact, 1.0)


def test_rule_nodes_ascending_and_symmetric():
    rule = gauss_hermite_rule(15)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.allclose(rule.nodes, -rule.nodes[::-1], atol=0)
    assert rule.nodes[7] == 0.0


def test_function_weights_match_scaled_weights():
    rule = gauss_hermite_rule(12)
    assert np.allclose(rule.function_weights * np.exp(-rule.nodes ** 2), rule.weights, rtol=1e-10)


def test_function_weights_stay_finite_for_large_rules():
    rule = gauss_hermite_rule(1000)
    assert np.all(np.isfinite(rule.function_weights))
    assert np.all(rule.function_weights > 0)
    inner = np.abs(rule.nodes) < 2.0
    assert np.allclose(rule.function_weights[inner] * np.exp(-rule.nodes[inner] ** 2),
                       rule.weights[inner], rtol=1e-8)


def test_large_rule_keeps_high_order_functions_orthogonal():
    m, n = 1000, 200
    rule = gauss_hermite_rule(m)
    table = node_table(m, n)
    gram = table.T @ (rule.function_weights[:, None] * table)
    assert np.all(np.isfinite(gram))
    assert np.max(np.abs(gram - SQRT_PI * np.eye(n + 1))) <= 1e-9


def test_high_index_function_is_bounded():
    basis = BasisParams(beta=1.0, x0=0.0, n=200)
    values = np.array([hermite_function(200, basis, y) for y in np.linspace(-20.0, 20.0, 81)])
    assert np.all(np.isfinite(values))
    assert np.max(np.abs(values)) <= 1.0
    assert np.max(np.abs(values)) > 1e-3


def test_rule_rejects_empty_order():
    with pytest.raises(ValueError):
        gauss_hermite_rule(0)


@pytest.mark.parametrize('beta', [0.2, 1.0, 5.0])
@pytest.mark.parametrize('n', [8, 64])
def test_hermite_functions_are_orthogonal(beta, n):
    rule = gauss_hermite_rule(n + 1)
    table = node_table(n + 1, n)
    gram = table.T @ (rule.function_weights[:, None] * table) / beta
    expected = SQRT_PI / beta * np.eye(n + 1)
    assert np.max(np.abs(gram - expected)) <= 1e-10 * SQRT_PI / beta


def test_hermite_polynomial_values():
    assert hermite_polynomial(0, 0.3) == 1.0
    assert hermite_polynomial(1, 0.3) == pytest.approx(0.6)
    assert hermite_polynomial(4, 0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        hermite_polynomial(-1, 0.0)


def test_hermite_function_matches_closed_form():
    basis = BasisParams(beta=1.7, x0=-0.4, n=5)
    for x in (-2.0, -0.4, 0.3, 1.1):
        y = basis.beta * (x - basis.x0)
        expected = (8 * y ** 3 - 12 * y) * np.exp(-y ** 2 / 2) / np.sqrt(48.0)
        assert hermite_function(3, basis, x) == pytest.approx(expected, abs=1e-14)
    with pytest.raises(ValueError):
        hermite_function(6, basis, 0.0)


def test_function_table_shape():
    assert hermite_function_table(4, np.linspace(-1, 1, 7)).shape == (7, 5)


def test_collocation_points_are_mapped_nodes():
    basis = BasisParams(beta=2.0, x0=1.5, n=10)
    points = collocation_points(basis)
    assert np.allclose(points, 1.5 + gauss_hermite_rule(11).nodes / 2.0)
    assert np.all(np.diff(points) > 0)


def test_synthesize_matches_table_and_keeps_shape():
    rng = np.random.default_rng(7)
    basis = BasisParams(beta=0.8, x0=0.3, n=20)
    field = random_field(rng, basis)
    xs = rng.uniform(-4, 4, size=(3, 5))
    values = synthesize(field, xs)
    assert values.shape == (3, 5)
    table = hermite_function_table(basis.n, basis.beta * (xs.reshape(-1) - basis.x0))
    assert np.allclose(values.reshape(-1), table @ field.coeffs, atol=1e-12)
    assert np.allclose(field(xs), values)


def test_analyze_recovers_coefficients_from_collocation_values():
    rng = np.random.default_rng(11)
    basis = BasisParams(beta=1.3, x0=-0.7, n=30)
    field = random_field(rng, basis)
    recovered = analyze(synthesize(field, collocation_points(basis)), basis)
    assert np.allclose(recovered.coeffs, field.coeffs, atol=1e-10)


def test_analyze_rejects_wrong_length():
    with pytest.raises(ValueError):
        analyze(np.ones(4), BasisParams(1.0, 0.0, 4))


@pytest.mark.parametrize('kwargs', [
    dict(beta=0.0, x0=0.0, n=3),
    dict(beta=-1.0, x0=0.0, n=3),
    dict(beta=1.0, x0=0.0, n=-1),
    dict(beta=1.0, x0=0.0, n=2.5),
    dict(beta=1.0, x0=float('nan'), n=3),
    dict(beta=float('inf'), x0=0.0, n=3),
])
def test_basis_params_validation(kwargs):
    with pytest.raises(ValueError):
        BasisParams(**kwargs)


def test_basis_params_equality_ignores_signed_zero():
    assert BasisParams(1, -0.0, 3) == BasisParams(1.0, 0.0, 3)
    assert hash(BasisParams(1, -0.0, 3)) == hash(BasisParams(1.0, 0.0, 3))
    assert BasisParams(2.0, 0.0, 3).norm_sq == pytest.approx(SQRT_PI / 2.0)


def test_spectral_field_checks_length_and_is_read_only():
    basis = BasisParams(1.0, 0.0, 3)
    with pytest.raises(ValueError):
        SpectralField(basis, np.ones(3))
    field = SpectralField(basis, np.ones(4))
    with pytest.raises(ValueError):
        field.coeffs[0] = 2.0


def test_parseval_norm_of_unit_field():
    basis = BasisParams(0.5, 2.0, 6)
    assert SpectralField.unit(basis, 4).norm() == pytest.approx(np.sqrt(SQRT_PI / 0.5))
    assert SpectralField.zeros(basis).norm() == 0.0


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
