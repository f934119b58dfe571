#!/usr/bin/env python3
"""
Adaptive Basis Controller
Per-step decisions to move (bidirectionally), scale, refine or coarsen the
generalized Hermite basis, with dynamically updated thresholds. Every basis
change goes through the configured transfer (Galerkin projection by default).
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from config import ConfigError
from hermite_basis import BasisParams, SpectralField
from indicators import (
    DegenerateIndicatorError,
    exterior_error_indicators,
    frequency_from_coeffs,
    frequency_indicator,
    shifted_exterior_indicators,
)
from spectral_ops import derivative_norm, interpolate, project, resize, tail_norm, x_weighted_deriv_norm

logger = logging.getLogger(__name__)

MOVE_MODES = ('off', 'left', 'right', 'both')
TRANSFERS = ('projection', 'interpolation')
MIN_ORDER = 3
# Indicator values at or below this are round-off: never a trigger, never a reference
INDICATOR_FLOOR = 1e-13


class EventKind(str, Enum):
    MOVE_RIGHT = 'MoveRight'
    MOVE_LEFT = 'MoveLeft'
    SCALE_UP = 'ScaleUp'
    SCALE_DOWN = 'ScaleDown'
    REFINE = 'Refine'
    COARSEN = 'Coarsen'


@dataclass(frozen=True)
class AdaptiveConfig:
    """Controller parameters; defaults are the Example-1 settings."""

    q: float = 0.99
    nu: float = 1.02
    delta: float = 1e-4
    mu: float = 1.00005
    eta: float = 1.05
    eta0: float = 1.02
    gamma: float = 1.02
    d_max: float = 0.01
    n_max: int = 6
    beta_min: float = 0.2
    beta_max: float = 5.0
    enable_move_right: bool = True
    enable_move_left: bool = True
    enable_scale: bool = True
    enable_order: bool = True
    transfer: str = 'projection'

    def validate(self) -> 'AdaptiveConfig':
        checks = [
            (0 < self.q < 1, f"q must lie in (0, 1), got {self.q}"),
            (self.nu > 1, f"nu must exceed 1, got {self.nu}"),
            (self.mu > 1, f"mu must exceed 1, got {self.mu}"),
            (self.eta0 > 1, f"eta0 must exceed 1, got {self.eta0}"),
            (self.eta >= self.eta0, f"eta ({self.eta}) must be at least eta0 ({self.eta0})"),
            (self.gamma >= 1, f"gamma must be at least 1, got {self.gamma}"),
            (self.delta > 0, f"delta must be positive, got {self.delta}"),
            (self.d_max > 0, f"d_max must be positive, got {self.d_max}"),
            (self.delta <= self.d_max, f"delta ({self.delta}) must not exceed d_max ({self.d_max})"),
            (int(self.n_max) == self.n_max and self.n_max >= 1, f"n_max must be a positive integer, got {self.n_max}"),
            (0 < self.beta_min < self.beta_max,
             f"need 0 < beta_min < beta_max, got [{self.beta_min}, {self.beta_max}]"),
            (self.transfer in TRANSFERS, f"transfer must be one of {TRANSFERS}, got {self.transfer!r}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    @property
    def move_mode(self) -> str:
        if self.enable_move_left and self.enable_move_right:
            return 'both'
        if self.enable_move_left:
            return 'left'
        if self.enable_move_right:
            return 'right'
        return 'off'

    def with_move_mode(self, mode: str) -> 'AdaptiveConfig':
        if mode not in MOVE_MODES:
            raise ConfigError(f"move mode must be one of {MOVE_MODES}, got {mode!r}")
        return replace(self,
                       enable_move_left=mode in ('left', 'both'),
                       enable_move_right=mode in ('right', 'both'))

    @property
    def moving_enabled(self) -> bool:
        return self.enable_move_left or self.enable_move_right

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ThresholdState:
    """Reference indicator values the triggers compare against.

    NaN means "not yet recorded"; the first defined indicator value is taken.
    Recorded values are clamped from below at INDICATOR_FLOOR.
    """

    f_ref_scale: float
    f_ref_order: float
    e_ref_right: float
    e_ref_left: float
    eta_current: float

    @classmethod
    def initialize(cls, field: SpectralField, cfg: AdaptiveConfig) -> 'ThresholdState':
        try:
            frequency = frequency_indicator(field)
        except DegenerateIndicatorError:
            frequency = float('nan')
        try:
            right, left = exterior_error_indicators(field)
        except DegenerateIndicatorError:
            right = left = float('nan')
        frequency = floored(frequency)
        return cls(f_ref_scale=frequency, f_ref_order=frequency,
                   e_ref_right=floored(right), e_ref_left=floored(left), eta_current=cfg.eta)


def floored(value: float) -> float:
    """Reference value clamped at INDICATOR_FLOOR; NaN passes through."""
    if math.isnan(value):
        return value
    return max(value, INDICATOR_FLOOR)


@dataclass(frozen=True)
class AdaptationEvent:
    kind: EventKind
    time: float
    before: BasisParams
    after: BasisParams
    ledger_increment: float
    discarded_norm: float = float('nan')

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            't': self.time,
            'before': self.before.to_dict(),
            'after': self.after.to_dict(),
            'ledger_increment': self.ledger_increment,
        }


@dataclass(frozen=True)
class BasisTransfer:
    """An event together with the fields on either side of it."""

    event: AdaptationEvent
    before: SpectralField
    after: SpectralField


def _transfer(field: SpectralField, target: BasisParams, cfg: AdaptiveConfig) -> Tuple[SpectralField, float]:
    if cfg.transfer == 'interpolation':
        return interpolate(field, target), float('nan')
    moved, report = project(field, target)
    return moved, report.discarded_norm


def scaling_ledger_term(field: SpectralField, new_beta: float) -> float:
    """|b~ - b| sqrt(1 + b~/b) / (sqrt(2) b~) * ||(x - x0) dU/dx||."""
    beta = field.basis.beta
    factor = abs(new_beta - beta) * math.sqrt(1.0 + new_beta / beta) / (math.sqrt(2.0) * new_beta)
    # Rescaling dilates about x0, so the weight is measured from x0, not from 0
    return factor * x_weighted_deriv_norm(field, origin=field.basis.x0)


def _search_steps(cfg: AdaptiveConfig) -> int:
    return int(math.ceil(cfg.d_max / cfg.delta - 1e-9))


def _displacement(values: np.ndarray, threshold: float, cfg: AdaptiveConfig) -> float:
    """min(n delta, d_max) for the smallest n with values[n] < threshold."""
    below = np.flatnonzero(values < threshold)
    if below.size == 0:
        return cfg.d_max
    return min(below[0] * cfg.delta, cfg.d_max)


def maybe_move(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState,
               t: float = 0.0) -> Tuple[SpectralField, Optional[BasisTransfer]]:
    """Bidirectional exterior-error-dependent moving."""
    if not cfg.moving_enabled:
        return field, None
    try:
        e_right, e_left = exterior_error_indicators(field)
    except DegenerateIndicatorError:
        logger.debug(f"t={t:.6g}: exterior indicators undefined, moving skipped")
        return field, None
    if math.isnan(st.e_ref_right) or math.isnan(st.e_ref_left):
        st.e_ref_right, st.e_ref_left = floored(e_right), floored(e_left)
        return field, None

    right_limit = cfg.mu * st.e_ref_right
    left_limit = cfg.mu * st.e_ref_left
    right_triggered = cfg.enable_move_right and e_right > right_limit
    left_triggered = cfg.enable_move_left and e_left > left_limit
    if not (right_triggered or left_triggered):
        return field, None

    # A side searches only when its own indicator fired
    steps = np.arange(_search_steps(cfg) + 1) * cfg.delta
    d_right = d_left = 0.0
    if right_triggered:
        right_values, _ = shifted_exterior_indicators(field, steps)
        d_right = _displacement(right_values, right_limit, cfg)
    if left_triggered:
        _, left_values = shifted_exterior_indicators(field, -steps)
        d_left = _displacement(left_values, left_limit, cfg)
    shift = d_right - d_left

    moved = field
    transfer = None
    if shift != 0.0:
        before = field.basis
        target = before.with_x0(before.x0 + shift)
        increment = abs(shift) * derivative_norm(field)
        moved, discarded = _transfer(field, target, cfg)
        kind = EventKind.MOVE_RIGHT if shift > 0 else EventKind.MOVE_LEFT
        event = AdaptationEvent(kind, t, before, target, increment, discarded)
        transfer = BasisTransfer(event, field, moved)
        logger.debug(f"t={t:.6g}: {kind.value} by {shift:.3g} (d_R={d_right:.3g}, d_L={d_left:.3g})")

    try:
        right, left = exterior_error_indicators(moved)
    except DegenerateIndicatorError:
        return moved, transfer
    st.e_ref_right, st.e_ref_left = floored(right), floored(left)
    return moved, transfer


def _scale_candidates(beta: float, cfg: AdaptiveConfig) -> List[float]:
    candidates = []
    candidate = beta * cfg.q
    while candidate >= cfg.beta_min:
        candidates.append(candidate)
        candidate *= cfg.q
    if beta > cfg.beta_min and (not candidates or candidates[-1] > cfg.beta_min):
        candidates.append(cfg.beta_min)
    return candidates


def _clamp_beta(beta: float, cfg: AdaptiveConfig) -> float:
    return min(max(beta, cfg.beta_min), cfg.beta_max)


def maybe_scale(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState,
                t: float = 0.0) -> Tuple[SpectralField, Optional[BasisTransfer], bool]:
    """Frequency-dependent scaling; the flag asks for refinement when no beta suffices."""
    if not cfg.enable_scale:
        return field, None, False
    try:
        frequency = frequency_indicator(field)
    except DegenerateIndicatorError:
        logger.debug(f"t={t:.6g}: frequency indicator undefined, scaling skipped")
        return field, None, False
    if math.isnan(st.f_ref_scale):
        st.f_ref_scale = floored(frequency)
        return field, None, False
    if frequency <= INDICATOR_FLOOR:
        return field, None, False

    basis = field.basis
    if frequency > cfg.nu * st.f_ref_scale:
        threshold = cfg.nu * st.f_ref_scale
        for candidate in _scale_candidates(basis.beta, cfg):
            target = basis.with_beta(_clamp_beta(candidate, cfg))
            scaled, discarded = _transfer(field, target, cfg)
            try:
                new_frequency = frequency_indicator(scaled)
            except DegenerateIndicatorError:
                continue
            if new_frequency < threshold:
                scaled, transfer = _accept_scaling(field, scaled, discarded, new_frequency, st, t)
                return scaled, transfer, False
        logger.debug(f"t={t:.6g}: no beta in [{cfg.beta_min:.3g}, {basis.beta:.3g}] brings "
                     f"F={frequency:.3e} under {threshold:.3e}; refinement requested")
        return field, None, True

    if frequency < st.f_ref_scale:
        candidate = _clamp_beta(basis.beta / cfg.q, cfg)
        if candidate <= basis.beta:
            return field, None, False
        scaled, discarded = _transfer(field, basis.with_beta(candidate), cfg)
        try:
            new_frequency = frequency_indicator(scaled)
        except DegenerateIndicatorError:
            return field, None, False
        if new_frequency <= st.f_ref_scale:
            scaled, transfer = _accept_scaling(field, scaled, discarded, new_frequency, st, t)
            return scaled, transfer, False
    return field, None, False


def _accept_scaling(field: SpectralField, scaled: SpectralField, discarded: float, new_frequency: float,
                    st: ThresholdState, t: float) -> Tuple[SpectralField, BasisTransfer]:
    kind = EventKind.SCALE_DOWN if scaled.basis.beta < field.basis.beta else EventKind.SCALE_UP
    increment = scaling_ledger_term(field, scaled.basis.beta)
    event = AdaptationEvent(kind, t, field.basis, scaled.basis, increment, discarded)
    st.f_ref_scale = floored(new_frequency)
    logger.debug(f"t={t:.6g}: {kind.value} beta {field.basis.beta:.6g} -> {scaled.basis.beta:.6g}")
    return scaled, BasisTransfer(event, field, scaled)


def _refined_order(field: SpectralField, cfg: AdaptiveConfig, threshold: float) -> int:
    n = field.basis.n
    for candidate in range(n + 1, n + int(cfg.n_max) + 1):
        padded = np.zeros(candidate + 1, dtype=complex)
        padded[:n + 1] = field.coeffs
        if frequency_from_coeffs(padded) < threshold:
            return candidate
    return n + int(cfg.n_max)


def _coarsened_order(field: SpectralField, limit: float) -> Optional[Tuple[int, float]]:
    for candidate in range(MIN_ORDER, field.basis.n):
        try:
            frequency = frequency_indicator(resize(field, candidate))
        except DegenerateIndicatorError:
            continue
        if frequency <= limit:
            return candidate, frequency
    return None


def maybe_adapt_order(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState,
                      refine_needed: bool = False,
                      t: float = 0.0) -> Tuple[SpectralField, Optional[BasisTransfer]]:
    """p-adaptivity: zero-pad (exact) or truncate (ledgered) the expansion."""
    if not cfg.enable_order:
        return field, None
    try:
        frequency = frequency_indicator(field)
    except DegenerateIndicatorError:
        logger.debug(f"t={t:.6g}: frequency indicator undefined, order adaptation skipped")
        return field, None
    if math.isnan(st.f_ref_order):
        st.f_ref_order = floored(frequency)
        return field, None

    before = field.basis
    threshold = st.eta_current * st.f_ref_order
    if refine_needed or frequency > threshold:
        new_n = _refined_order(field, cfg, threshold)
        refined = resize(field, new_n)
        st.eta_current *= cfg.gamma
        post = floored(frequency_indicator(refined))
        st.f_ref_order = st.f_ref_scale = post
        event = AdaptationEvent(EventKind.REFINE, t, before, refined.basis, 0.0, 0.0)
        logger.debug(f"t={t:.6g}: Refine N {before.n} -> {new_n} (F={frequency:.3e}, threshold {threshold:.3e})")
        return refined, BasisTransfer(event, field, refined)

    if frequency < st.f_ref_order / cfg.eta0:
        found = _coarsened_order(field, cfg.eta0 * st.f_ref_order)
        if found is None:
            return field, None
        new_n, post = found
        increment = tail_norm(field, new_n)
        coarse = resize(field, new_n)
        st.f_ref_order = st.f_ref_scale = floored(post)
        event = AdaptationEvent(EventKind.COARSEN, t, before, coarse.basis, increment, increment)
        logger.debug(f"t={t:.6g}: Coarsen N {before.n} -> {new_n} (tail {increment:.3e})")
        return coarse, BasisTransfer(event, field, coarse)
    return field, None


def controller_step_detailed(field: SpectralField, t: float, cfg: AdaptiveConfig,
                             st: ThresholdState) -> Tuple[SpectralField, List[BasisTransfer]]:
    """MOVE, then SCALE, then REFINE/COARSEN; returns every transfer with its fields."""
    transfers = []
    field, moved = maybe_move(field, cfg, st, t)
    if moved is not None:
        transfers.append(moved)
    field, scaled, refine_needed = maybe_scale(field, cfg, st, t)
    if scaled is not None:
        transfers.append(scaled)
    field, ordered = maybe_adapt_order(field, cfg, st, refine_needed, t)
    if ordered is not None:
        transfers.append(ordered)
    return field, transfers


def controller_step(field: SpectralField, t: float, cfg: AdaptiveConfig,
                    st: ThresholdState) -> Tuple[SpectralField, List[AdaptationEvent]]:
    field, transfers = controller_step_detailed(field, t, cfg, st)
    return field, [transfer.event for transfer in transfers]


class AdaptiveController:
    """Controller bound to one run: owns the threshold state."""

    def __init__(self, cfg: AdaptiveConfig, field: SpectralField):
        self.cfg = cfg.validate()
        self.state = ThresholdState.initialize(field, cfg)
        self.last_transfers: List[BasisTransfer] = []

    def step(self, field: SpectralField, t: float) -> Tuple[SpectralField, List[AdaptationEvent]]:
        field, self.last_transfers = controller_step_detailed(field, t, self.cfg, self.state)
        return field, [transfer.event for transfer in self.last_transfers]
