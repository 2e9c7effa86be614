"""Closed-form AFC efficiency theory: single pass, impedance-matched cavity, spin-wave budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError
from .models import GAUSSIAN_AREA_FACTOR, EfficiencyBudget, SpinParams, ToothShape, Validity

LN2 = math.log(2.0)
SINGLE_PASS_BOUND = 4.0 * math.exp(-2.0)


@dataclass(frozen=True)
class Estimate:
    value: float
    validity: Validity = Validity()

    def __float__(self) -> float:
        return self.value


def _require_finesse(finesse: float) -> None:
    if not finesse >= 1:
        raise DomainError(f"finesse ≥ 1 required, got {finesse}")


def _require_non_negative(name: str, value: float) -> None:
    if not value >= 0:
        raise DomainError(f"{name} must be ≥ 0, got {value}")


def _require_fraction(name: str, value: float) -> None:
    if not 0 <= value <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


def eta_deph_square(finesse: float) -> float:
    """sinc²(π/F) with the unnormalized sinc(x) = sin(x)/x."""
    _require_finesse(finesse)
    if math.isinf(finesse):
        return 1.0
    x = math.pi / finesse
    return (math.sin(x) / x) ** 2


def eta_deph_gaussian(finesse: float) -> float:
    _require_finesse(finesse)
    return math.exp(-(math.pi**2) / (2.0 * LN2) / finesse**2)


def eta_deph(finesse: float, shape: ToothShape = ToothShape.SQUARE) -> float:
    if shape is ToothShape.GAUSSIAN:
        return eta_deph_gaussian(finesse)
    return eta_deph_square(finesse)


def average_depth(peak_depth: float, finesse: float, shape: ToothShape = ToothShape.SQUARE) -> float:
    _require_non_negative("peak depth", peak_depth)
    _require_finesse(finesse)
    d_tilde = peak_depth / finesse
    if shape is ToothShape.GAUSSIAN:
        d_tilde *= GAUSSIAN_AREA_FACTOR
    return d_tilde


def eta_single_pass(
    d_tilde: float,
    finesse: float,
    shape: ToothShape = ToothShape.SQUARE,
    background_depth: float = 0.0,
) -> float:
    """Forward echo efficiency d̃²·exp(−d̃)·η_deph, with optional background absorption exp(−d₀)."""
    _require_non_negative("d_tilde", d_tilde)
    _require_non_negative("background depth", background_depth)
    return d_tilde**2 * math.exp(-d_tilde) * eta_deph(finesse, shape) * math.exp(-background_depth)


def single_pass_bound() -> float:
    # re-absorption limit of the forward echo, reached at d̃ = 2
    return SINGLE_PASS_BOUND


def optimal_finesse(peak_depth: float) -> float:
    """Finesse maximizing the square-tooth single-pass efficiency at fixed peak depth."""
    if not peak_depth > 0:
        raise DomainError(f"peak depth must be > 0, got {peak_depth}")
    return math.pi / math.atan(2.0 * math.pi / peak_depth)


def impedance_match_reflectivity(d_tilde: float) -> float:
    _require_non_negative("d_tilde", d_tilde)
    return math.exp(-2.0 * d_tilde)


def impedance_match_depth(reflectivity: float) -> float:
    if not 0 < reflectivity <= 1:
        raise DomainError(f"reflectivity must be in (0, 1], got {reflectivity}")
    return -math.log(reflectivity) / 2.0


def eta_cavity_finite_depth(d_tilde: float) -> float:
    """d̃²/sinh²(d̃); equals 1 at d̃ = 0."""
    _require_non_negative("d_tilde", d_tilde)
    if d_tilde < 1e-4:
        return 1.0 - d_tilde**2 / 3.0
    return (d_tilde / math.sinh(d_tilde)) ** 2


def eta_cavity_loss(d_tilde: float, epsilon: float) -> Estimate:
    """(1 + ε/(4d̃))⁻⁴, flagged when outside ε ≪ d̃ ≪ 1."""
    _require_non_negative("d_tilde", d_tilde)
    _require_non_negative("epsilon", epsilon)
    reasons = []
    if d_tilde > 0.5:
        reasons.append(f"d_tilde={d_tilde:g} not small against 1")
    if epsilon == 0:
        value = 1.0
    elif d_tilde == 0:
        raise DomainError("d_tilde = 0 with a lossy cavity has no impedance match")
    else:
        if epsilon > 0.5 * d_tilde:
            reasons.append(f"epsilon={epsilon:g} not small against d_tilde={d_tilde:g}")
        value = (1.0 + epsilon / (4.0 * d_tilde)) ** -4
    return Estimate(value, Validity(ok=not reasons, reasons=tuple(reasons)))


def eta_cavity(
    d_tilde: float,
    finesse: float,
    epsilon: float = 0.0,
    shape: ToothShape = ToothShape.SQUARE,
) -> Estimate:
    loss = eta_cavity_loss(d_tilde, epsilon)
    value = eta_deph(finesse, shape) * eta_cavity_finite_depth(d_tilde) * loss.value
    return Estimate(value, loss.validity)


def cavity_gain(peak_depth: float, finesse: float, epsilon: float = 0.0) -> float:
    d_tilde = average_depth(peak_depth, finesse)
    single = eta_single_pass(d_tilde, finesse)
    if single == 0:
        raise DomainError("single-pass efficiency is zero, gain undefined")
    return eta_cavity(d_tilde, finesse, epsilon).value / single


def eta_spin_dephasing(spin: SpinParams, spin_wave_time: float) -> float:
    _require_non_negative("T_sw", spin_wave_time)
    exponent = spin.gamma_spin**2 * spin_wave_time**2 * math.pi**2 / (2.0 * LN2)
    return math.exp(-exponent)


def spin_ensemble_average(spin: SpinParams, spin_wave_time: float, n_points: int = 4001) -> float:
    """|⟨exp(i2πδT)⟩|² over a Gaussian spin detuning distribution, by quadrature."""
    _require_non_negative("T_sw", spin_wave_time)
    if spin.gamma_spin == 0:
        return 1.0
    sigma = spin.gamma_spin / (2.0 * math.sqrt(2.0 * LN2))
    detunings = np.linspace(-8.0 * sigma, 8.0 * sigma, n_points)
    weights = np.exp(-(detunings**2) / (2.0 * sigma**2))
    phases = np.exp(2j * math.pi * detunings * spin_wave_time)
    mean = trapezoid(weights * phases, detunings) / trapezoid(weights, detunings)
    return float(abs(mean) ** 2)


def total_budget(eta_2l: float, eta_t: float, eta_sw: float, overlap: float = 1.0) -> EfficiencyBudget:
    """Spin-wave memory efficiency η_2L·η_T²·η_sw·overlap."""
    for name, value in (("eta_2l", eta_2l), ("eta_t", eta_t), ("eta_sw", eta_sw), ("overlap", overlap)):
        _require_fraction(name, value)
    return EfficiencyBudget(
        eta_2l=eta_2l,
        eta_t=eta_t,
        eta_sw=eta_sw,
        overlap=overlap,
        eta_total=eta_2l * eta_t**2 * eta_sw * overlap,
    )


def solve_overlap(eta_total: float, eta_2l: float, eta_t: float, eta_sw: float) -> float:
    """Overlap factor that closes the budget for an observed total efficiency."""
    denominator = eta_2l * eta_t**2 * eta_sw
    if denominator == 0:
        raise DomainError("budget factors multiply to zero, overlap undefined")
    return eta_total / denominator
