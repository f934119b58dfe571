#!/usr/bin/env python3
"""
Problem Definitions
The weak parabolic model u_t + A u = f on the real line, plus the two
manufactured-solution examples and the L2 error measures used against them.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from adaptive_controller import AdaptiveConfig
from config import ConfigError
from hermite_basis import BasisParams, SpectralField, synthesize
from indicators import DegenerateIndicatorError
from spectral_ops import project_function, quadrature_norm
from time_integrator import BilinearForm, SourceTerm

logger = logging.getLogger(__name__)

SpaceTimeFn = Callable[[np.ndarray, float], np.ndarray]

ALIGNMENT_TOLERANCE = 1e-9
ZERO_NORM = 1e-300


@dataclass(frozen=True)
class ParabolicProblem:
    """A parabolic problem together with its recommended discretization."""

    name: str
    form: BilinearForm
    source: SourceTerm
    initial: Callable[[np.ndarray], np.ndarray]
    horizon: float
    dt: float
    analytic: Optional[SpaceTimeFn] = None
    breakpoints: Tuple[float, ...] = ()
    basis: BasisParams = BasisParams(1.0, 0.0, 40)
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        self.steps_for(self.dt, self.horizon)

    def steps_for(self, dt: float, horizon: float) -> int:
        """Whole number of steps covering the horizon; breakpoints must land on steps."""
        steps = int(round(horizon / dt))
        if steps < 1 or abs(steps * dt - horizon) > ALIGNMENT_TOLERANCE * max(horizon, 1.0):
            raise ConfigError(f"horizon {horizon} is not a whole number of steps of {dt}")
        for seam in self.breakpoints:
            if 0 < seam < horizon:
                k = round(seam / dt)
                if abs(k * dt - seam) > ALIGNMENT_TOLERANCE * max(seam, 1.0):
                    raise ConfigError(f"source breakpoint t={seam} is not a multiple of dt={dt}")
        return steps

    def with_timing(self, dt: Optional[float] = None, horizon: Optional[float] = None) -> 'ParabolicProblem':
        return replace(self, dt=dt or self.dt, horizon=horizon or self.horizon)


def _example1_solution(x, t):
    s = t + 1.0
    return np.exp(1j * s * x - (x - 2.0 * t) ** 2 / (4.0 * s)) / np.sqrt(s)


def _example1_source(x, t):
    s = t + 1.0
    phase = np.exp(1j * s * x - (x - 2.0 * t) ** 2 / (4.0 * s))
    return ((x - 2.0 * t) + s ** 3 + 2j * (x - t) * s) / s ** 1.5 * phase


def example1() -> ParabolicProblem:
    """Drifting, spreading, oscillating Gaussian under the heat operator."""
    return ParabolicProblem(
        name='example1',
        form=BilinearForm.heat(),
        source=SourceTerm(_example1_source, name='example1'),
        initial=lambda x: _example1_solution(np.asarray(x, dtype=float), 0.0),
        analytic=_example1_solution,
        horizon=2.0,
        dt=2e-4,
        basis=BasisParams(1.0, 0.0, 40),
        adaptive=AdaptiveConfig(),
    )


def example2(v: float = 2.0) -> ParabolicProblem:
    """Gaussian-sine travelling left until t = 2, then right at speed v."""

    def solution(x, t):
        y = x + v * t if t <= 2.0 else x - v * (t - 4.0)
        return np.exp(-y ** 2) * np.sin(y)

    def source(x, t):
        if t <= 2.0:
            y = x + v * t
            return np.exp(-y ** 2) * ((3.0 - 2.0 * v * y - 4.0 * y ** 2) * np.sin(y) + (v + 4.0 * y) * np.cos(y))
        z = x - v * (t - 4.0)
        return np.exp(-z ** 2) * ((3.0 - 4.0 * z ** 2 + 2.0 * v * z) * np.sin(z) + (4.0 * z - v) * np.cos(z))

    return ParabolicProblem(
        name='example2',
        form=BilinearForm.heat(),
        source=SourceTerm(source, name='example2'),
        initial=lambda x: solution(np.asarray(x, dtype=float), 0.0),
        analytic=solution,
        horizon=6.0,
        dt=2e-4,
        breakpoints=(2.0,),
        basis=BasisParams(1.2, 0.0, 24),
        adaptive=AdaptiveConfig(mu=1.0005, delta=0.0005, d_max=0.2,
                                enable_scale=False, enable_order=False),
    )


PROBLEMS: Dict[str, Callable[[], ParabolicProblem]] = {
    'example1': example1,
    'example2': example2,
}


def get_problem(name: str) -> ParabolicProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ConfigError(f"unknown problem '{name}'; choose from {sorted(PROBLEMS)}") from None


def _error_order(spectral: SpectralField) -> int:
    return 4 * spectral.basis.size


def absolute_l2_error(spectral: SpectralField, analytic: SpaceTimeFn, t: float) -> float:
    """||u(., t) - U|| by Gauss-Hermite quadrature in the field's own scale."""
    return quadrature_norm(lambda x: analytic(x, t) - synthesize(spectral, x),
                           spectral.basis, _error_order(spectral))


def analytic_norm(spectral: SpectralField, analytic: SpaceTimeFn, t: float) -> float:
    return quadrature_norm(lambda x: analytic(x, t), spectral.basis, _error_order(spectral))


def relative_l2_error(spectral: SpectralField, analytic: SpaceTimeFn, t: float) -> float:
    denominator = analytic_norm(spectral, analytic, t)
    if denominator < ZERO_NORM:
        raise DegenerateIndicatorError(f"analytic solution has zero norm at t={t}")
    return absolute_l2_error(spectral, analytic, t) / denominator


def analytic_tail_norm(analytic: SpaceTimeFn, t: float, basis: BasisParams, keep: int) -> float:
    """||(I - pi_keep) u(., t)|| in the given (beta, x0)."""
    order = 4 * basis.size
    kept = project_function(lambda x: analytic(x, t), basis.with_n(keep), order)
    total = quadrature_norm(lambda x: analytic(x, t), basis, order)
    return float(np.sqrt(max(total ** 2 - kept.norm_sq(), 0.0)))
