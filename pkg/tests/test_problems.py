#!/usr/bin/env python3
"""
Tests for the manufactured-solution problems and the error measures
"""

import os
import sys

import numpy as np
import pytest

# Add parent directory to path to import modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import ConfigError  # noqa: E402
from hermite_basis import BasisParams, SpectralField  # noqa: E402
from indicators import DegenerateIndicatorError  # noqa: E402
from problems import (  # noqa: E402
    PROBLEMS,
    absolute_l2_error,
    analytic_tail_norm,
    example1,
    example2,
    get_problem,
    relative_l2_error,
)
from spectral_ops import project_function  # noqa: E402

XS = np.linspace(-6.0, 6.0, 49)


def heat_residual(problem, t, h=1e-3):
    """u_t - u_xx - f by fourth-order central differences."""
    u = problem.analytic
    u_t = (-u(XS, t + 2 * h) + 8 * u(XS, t + h) - 8 * u(XS, t - h) + u(XS, t - 2 * h)) / (12 * h)
    u_xx = (-u(XS + 2 * h, t) + 16 * u(XS + h, t) - 30 * u(XS, t)
            + 16 * u(XS - h, t) - u(XS - 2 * h, t)) / (12 * h ** 2)
    return np.max(np.abs(u_t - u_xx - problem.source.eval(XS, t)))


def test_example1_initial_condition():
    problem = example1()
    expected = np.exp(1j * XS - XS ** 2 / 4)
    assert np.allclose(problem.initial(XS), expected, atol=1e-15)
    assert np.allclose(problem.analytic(XS, 0.0), expected, atol=1e-15)


def test_example1_peak_drifts_and_decays():
    problem = example1()
    for t in (0.5, 1.0, 2.0):
        value = problem.analytic(np.array([2 * t]), t)[0]
        assert abs(value) == pytest.approx(1 / np.sqrt(t + 1))


@pytest.mark.parametrize('t', [0.1, 0.7, 1.5])
def test_example1_source_is_consistent(t):
    assert heat_residual(example1(), t) < 1e-6


@pytest.mark.parametrize('t', [0.3, 1.7, 2.5, 5.0])
def test_example2_source_is_consistent(t):
    assert heat_residual(example2(), t) < 1e-6


def test_example2_solution_is_continuous_at_the_turn():
    problem = example2()
    before = problem.analytic(XS, 2.0)
    after = problem.analytic(XS, 2.0 + 1e-12)
    assert np.max(np.abs(after - before)) < 1e-9


def test_example2_is_a_pure_translation():
    problem = example2(v=2.0)
    shape = np.exp(-XS ** 2) * np.sin(XS)
    assert np.allclose(problem.analytic(XS - 4.0, 2.0), shape, atol=1e-13)
    assert np.allclose(problem.analytic(XS + 4.0, 6.0), shape, atol=1e-13)


def test_example2_settings():
    problem = example2()
    assert problem.breakpoints == (2.0,)
    assert problem.basis == BasisParams(1.2, 0.0, 24)
    assert problem.adaptive.move_mode == 'both'
    assert not problem.adaptive.enable_scale and not problem.adaptive.enable_order
    assert problem.steps_for(problem.dt, problem.horizon) == 30000


def test_steps_must_align_with_horizon_and_breakpoints():
    problem = example2()
    with pytest.raises(ConfigError):
        problem.with_timing(dt=0.3)
    with pytest.raises(ConfigError):
        problem.steps_for(0.4, 2.2)
    assert problem.steps_for(0.5, 6.0) == 12
    with pytest.raises(ValueError):
        example1().with_timing(dt=-1.0)


def test_problem_registry():
    assert set(PROBLEMS) == {'example1', 'example2'}
    assert get_problem('example1').horizon == 2.0
    with pytest.raises(ConfigError):
        get_problem('example3')


def test_error_of_an_exact_field_is_zero():
    basis = BasisParams(1.0, 0.0, 6)
    field = SpectralField.unit(basis, 0)

    def analytic(x, t):
        return np.exp(-x ** 2 / 2)

    assert absolute_l2_error(field, analytic, 0.0) < 1e-14
    assert relative_l2_error(field, analytic, 0.0) < 1e-14


def test_zero_field_has_unit_relative_error():
    field = SpectralField.zeros(BasisParams(1.0, 0.0, 6))
    assert relative_l2_error(field, lambda x, t: np.exp(-x ** 2), 0.0) == pytest.approx(1.0)
    with pytest.raises(DegenerateIndicatorError):
        relative_l2_error(field, lambda x, t: np.zeros_like(x), 0.0)


def test_badly_scaled_basis_shows_in_the_error():
    def analytic(x, t):
        return np.exp(-x ** 2 / 8)

    wide = project_function(lambda x: analytic(x, 0.0), BasisParams(0.5, 0.0, 20))
    narrow = project_function(lambda x: analytic(x, 0.0), BasisParams(5.0, 0.0, 20))
    assert relative_l2_error(wide, analytic, 0.0) < 1e-8
    assert relative_l2_error(narrow, analytic, 0.0) > 1e-2


def test_analytic_tail_of_a_resolved_solution():
    basis = BasisParams(1.0, 0.0, 40)
    tail = analytic_tail_norm(example1().analytic, 0.0, basis, keep=27)
    assert 0.0 <= tail < 1e-5
    exact = analytic_tail_norm(lambda x, t: np.exp(-x ** 2 / 2), 0.0, basis, keep=3)
    assert exact == pytest.approx(0.0, abs=1e-7)


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
