#!/usr/bin/env python3
"""
Exact-Exponential Time Integrator
Advances the Galerkin coefficient system u' = -M^{-1} A u + M^{-1} F(t) with
a Taylor scaling-and-squaring exponential and Gauss-Legendre source quadrature.
"""

import logging
from typing import Callable, List, Optional

import numpy as np

from config import ConfigError
from hermite_basis import (
    SQRT_PI,
    BasisParams,
    NumericalError,
    SpectralField,
    gauss_hermite_rule,
    hermite_function_table,
    node_table,
)
from spectral_ops import derivative_matrix

logger = logging.getLogger(__name__)

__all__ = [
    'BilinearForm', 'SourceTerm', 'Propagator', 'NumericalError',
    'assemble_stiffness', 'expm_apply', 'step', 'project_source',
]

TAYLOR_TOLERANCE = 1e-15
TAYLOR_MAX_TERMS = 60
SYMMETRY_TOLERANCE = 1e-12

CoefficientFn = Callable[[np.ndarray, float], np.ndarray]


class BilinearForm:
    """Rule producing the stiffness matrix a(H_j, H_i) for a basis.

    Built-in forms are the Dirichlet (heat) form and the zero form. General forms
    a(u, v) = (p u_x, v_x) + (b u_x, v) + (r u, v) take coefficient callables
    of (x, t) and are assembled by Gauss-Hermite quadrature.
    """

    def __init__(self, name: str, symmetric: bool = True,
                 diffusion: Optional[CoefficientFn] = None,
                 advection: Optional[CoefficientFn] = None,
                 reaction: Optional[CoefficientFn] = None,
                 time_dependent: bool = False):
        self.name = name
        self.symmetric = symmetric
        self.diffusion = diffusion
        self.advection = advection
        self.reaction = reaction
        self.time_dependent = time_dependent

    @classmethod
    def heat(cls) -> 'BilinearForm':
        return cls('heat')

    @classmethod
    def zero(cls) -> 'BilinearForm':
        return cls('zero')

    @classmethod
    def from_coefficients(cls, diffusion=None, advection=None, reaction=None,
                          symmetric: bool = True, time_dependent: bool = False) -> 'BilinearForm':
        return cls('custom', symmetric=symmetric, diffusion=diffusion, advection=advection,
                   reaction=reaction, time_dependent=time_dependent)

    def assemble(self, basis: BasisParams, t: float = 0.0) -> np.ndarray:
        if self.name == 'zero':
            return np.zeros((basis.size, basis.size))
        if self.name == 'heat':
            d = derivative_matrix(basis.n)
            return basis.beta ** 2 * basis.norm_sq * (d.T @ d)
        return self._assemble_by_quadrature(basis, t)

    def _assemble_by_quadrature(self, basis: BasisParams, t: float) -> np.ndarray:
        m = 2 * (basis.n + 2) + 8
        rule = gauss_hermite_rule(m)
        xs = rule.map_to(basis)
        phi = node_table(m, basis.n)
        dphi = basis.beta * (hermite_function_table(basis.n + 1, rule.nodes) @ derivative_matrix(basis.n))
        w = rule.function_weights / basis.beta

        matrix = np.zeros((basis.size, basis.size))
        if self.diffusion is not None:
            matrix += dphi.T @ ((w * self.diffusion(xs, t))[:, None] * dphi)
        if self.advection is not None:
            # row i tests with v = H_i, column j carries u = H_j
            matrix += phi.T @ ((w * self.advection(xs, t))[:, None] * dphi)
        if self.reaction is not None:
            matrix += phi.T @ ((w * self.reaction(xs, t))[:, None] * phi)

        if self.symmetric:
            scale = max(np.max(np.abs(matrix)), 1.0)
            asymmetry = np.max(np.abs(matrix - matrix.T))
            if asymmetry > SYMMETRY_TOLERANCE * scale:
                raise ConfigError(
                    f"form '{self.name}' declared symmetric but assembled asymmetry is {asymmetry:.3e}")
        return matrix


class SourceTerm:
    """Right-hand side f(x, t)."""

    def __init__(self, func: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
                 name: str = 'source'):
        self.func = func
        self.name = name

    @classmethod
    def zero(cls) -> 'SourceTerm':
        return cls(None, name='zero')

    @property
    def is_zero(self) -> bool:
        return self.func is None

    def eval(self, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.func is None:
            return np.zeros(x.shape, dtype=complex)
        return np.asarray(self.func(x, t), dtype=complex)


def assemble_stiffness(form: BilinearForm, basis: BasisParams, t: float = 0.0) -> np.ndarray:
    return form.assemble(basis, t)


def _taylor_apply(a: np.ndarray, h: float, v: np.ndarray) -> np.ndarray:
    """Truncated series of exp(-a h) applied to v."""
    term = v
    total = v.copy()
    for k in range(1, TAYLOR_MAX_TERMS + 1):
        term = -(h / k) * (a @ term)
        total = total + term
        if np.linalg.norm(term) <= TAYLOR_TOLERANCE * np.linalg.norm(total):
            return total
    raise NumericalError(
        f"Taylor series did not converge in {TAYLOR_MAX_TERMS} terms "
        f"(||A||*h = {np.linalg.norm(a, 1) * h:.3e})")


def expm_apply(a: np.ndarray, dt: float, v: np.ndarray) -> np.ndarray:
    """exp(-A dt) v by the cubic split (exp(-A dt/3))^3 with extra halvings.

    The third is halved until ||A|| h <= 1 so the series argument stays small;
    v may be a vector or a matrix of column vectors.
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    v = np.asarray(v)
    if dt == 0:
        return v.copy()
    h = dt / 3.0
    repeats = 3
    norm_a = np.linalg.norm(a, 1)
    while norm_a * h > 1.0:
        h /= 2.0
        repeats *= 2
    w = v.astype(complex)
    for _ in range(repeats):
        w = _taylor_apply(a, h, w)
    return w


def gauss_legendre(order: int):
    if order < 1:
        raise ValueError(f"gl_order must be at least 1, got {order}")
    return np.polynomial.legendre.leggauss(order)


def source_quadrature_order(basis: BasisParams) -> int:
    return max(2 * basis.size, 32)


def project_source(src: SourceTerm, basis: BasisParams, t: float) -> np.ndarray:
    """Mass-normalized load vector f_i / ||H_i||^2."""
    m = source_quadrature_order(basis)
    rule = gauss_hermite_rule(m)
    values = src.eval(rule.map_to(basis), t)
    return node_table(m, basis.n).T @ (rule.function_weights * values) / SQRT_PI


def _normalized_operator(form: BilinearForm, basis: BasisParams, t: float) -> np.ndarray:
    return assemble_stiffness(form, basis, t) / basis.norm_sq


def step(field: SpectralField, t: float, dt: float, form: BilinearForm, src: SourceTerm,
         gl_order: int = 5) -> SpectralField:
    """One exact-exponential step from t to t + dt on the field's own basis."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    basis = field.basis
    a_hat = _normalized_operator(form, basis, t)
    u = expm_apply(a_hat, dt, field.coeffs)
    if not src.is_zero:
        nodes, weights = gauss_legendre(gl_order)
        for node, weight in zip(nodes, weights):
            s = t + 0.5 * dt * (1.0 + node)
            u = u + 0.5 * dt * weight * expm_apply(a_hat, t + dt - s, project_source(src, basis, s))
    return SpectralField(basis, u)


class Propagator:
    """Step operator bound to one basis, form and step size.

    Vector exponentials are used at first; once the basis has survived as many
    steps as it has columns, the exponentials are frozen into matrices.
    """

    def __init__(self, form: BilinearForm, basis: BasisParams, dt: float, gl_order: int = 5):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.form = form
        self.basis = basis
        self.dt = dt
        self.gl_order = gl_order
        self.nodes, self.weights = gauss_legendre(gl_order)
        # remaining time from each Gauss-Legendre node to the step end
        self.lags = 0.5 * dt * (1.0 - self.nodes)
        self.a_hat = None if form.time_dependent else _normalized_operator(form, basis, 0.0)
        self.uses = 0
        self._step_matrix: Optional[np.ndarray] = None
        self._lag_matrices: Optional[List[np.ndarray]] = None

    def _freeze(self):
        identity = np.eye(self.basis.size)
        self._step_matrix = expm_apply(self.a_hat, self.dt, identity)
        self._lag_matrices = [expm_apply(self.a_hat, lag, identity) for lag in self.lags]
        logger.debug(f"Froze propagator matrices for {self.basis} after {self.uses} steps")

    def advance(self, field: SpectralField, t: float, src: SourceTerm) -> SpectralField:
        if field.basis != self.basis:
            raise ValueError(f"propagator built for {self.basis}, field is on {field.basis}")
        if self.form.time_dependent:
            return step(field, t, self.dt, self.form, src, self.gl_order)

        self.uses += 1
        if self._step_matrix is None and self.uses > self.basis.size:
            self._freeze()

        if self._step_matrix is not None:
            u = self._step_matrix @ field.coeffs
        else:
            u = expm_apply(self.a_hat, self.dt, field.coeffs)
        if not src.is_zero:
            for g, (node, weight) in enumerate(zip(self.nodes, self.weights)):
                s = t + 0.5 * self.dt * (1.0 + node)
                load = project_source(src, self.basis, s)
                if self._lag_matrices is not None:
                    pushed = self._lag_matrices[g] @ load
                else:
                    pushed = expm_apply(self.a_hat, self.lags[g], load)
                u = u + 0.5 * self.dt * weight * pushed
        return SpectralField(self.basis, u)
