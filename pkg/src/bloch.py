"""Two-level optical Bloch integration for chirped sech control pulses."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from .errors import DomainError, GridError, IntegrationError
from .models import AbsorptionProfile, BlochState, SechPulseParams, TimeGrid

logger = logging.getLogger("afcsim.bloch")

SECH_SCALE = 1.76
MIN_SAMPLES_PER_PERIOD = 20
# sech(20) ≈ 4e-9; beyond this the untruncated pulse is numerically zero
UNTRUNCATED_REACH = 20.0
RTOL = 1e-9
ATOL = 1e-12
INPUT_BANDWIDTH = 0.5e6
N_DETUNINGS = 51

RateFunction = Callable[[float], float]


@dataclass(frozen=True, eq=False)
class ControlWaveform:
    """Rabi amplitude Ω(t) and instantaneous detuning ν(t), both in Hz.

    `times` are sampled from `start`; the integrator evaluates the callables directly
    and only inside [start, stop].
    """

    rabi: RateFunction
    chirp: RateFunction
    start: float
    stop: float
    times: np.ndarray
    rabi_samples: np.ndarray
    chirp_samples: np.ndarray

    @property
    def area(self) -> float:
        """∫Ω dt in cycles; a π pulse has area 1/2."""
        return float(trapezoid(self.rabi_samples, self.times))


def _sample(rabi: RateFunction, chirp: RateFunction, start: float, stop: float, grid: TimeGrid) -> ControlWaveform:
    if grid.duration + grid.dt < stop - start:
        raise GridError(f"time grid of {grid.duration:g} s is shorter than the {stop - start:g} s control pulse")
    times = start + grid.times
    times = times[times <= stop]
    return ControlWaveform(
        rabi=rabi,
        chirp=chirp,
        start=start,
        stop=stop,
        times=times,
        rabi_samples=np.array([rabi(t) for t in times]),
        chirp_samples=np.array([chirp(t) for t in times]),
    )


def _support(p: SechPulseParams) -> tuple[float, float]:
    half = p.truncation / 2 if math.isfinite(p.truncation) else UNTRUNCATED_REACH * p.duration / SECH_SCALE
    return p.center_time - half, p.center_time + half


def _default_grid(p: SechPulseParams, start: float, stop: float) -> TimeGrid:
    shortest = p.duration / SECH_SCALE
    for rate in (p.omega_max, p.chirp_range):
        if rate > 0:
            shortest = min(shortest, 1.0 / rate)
    dt = shortest / MIN_SAMPLES_PER_PERIOD
    n_points = int(math.ceil((stop - start) / dt)) + 1
    return TimeGrid(n_points, n_points * dt)


def sech_waveform(p: SechPulseParams, grid: Optional[TimeGrid] = None) -> ControlWaveform:
    """Ω(t) = Ω_max·sech(1.76 t/T), ν(t) = (δν/2)·tanh(1.76 t/T), hard-cut to `truncation`.

    Grid times count from the start of the kept pulse.
    """
    start, stop = _support(p)
    if grid is None:
        grid = _default_grid(p, start, stop)
    for name, rate in (("omega_max", p.omega_max), ("delta_nu", p.chirp_range)):
        if rate > 0 and grid.dt > 1.0 / (MIN_SAMPLES_PER_PERIOD * rate):
            raise GridError(f"time step {grid.dt:g} s resolves 1/{name} by fewer than {MIN_SAMPLES_PER_PERIOD} samples")
    scale = SECH_SCALE / p.duration

    def rabi(t: float) -> float:
        if t < start or t > stop:
            return 0.0
        return p.omega_max / math.cosh(scale * (t - p.center_time))

    def chirp(t: float) -> float:
        return p.chirp_range / 2.0 * math.tanh(scale * (t - p.center_time))

    return _sample(rabi, chirp, start, stop, grid)


def square_waveform(omega: float, duration: float, start: float = 0.0, grid: Optional[TimeGrid] = None) -> ControlWaveform:
    """Constant Rabi frequency `omega` (Hz) without chirp."""
    if omega < 0 or duration <= 0:
        raise DomainError("square pulse needs omega ≥ 0 and duration > 0")
    stop = start + duration
    if grid is None:
        grid = TimeGrid(MIN_SAMPLES_PER_PERIOD + 1, duration * (1.0 + 1.0 / MIN_SAMPLES_PER_PERIOD))

    def rabi(t: float) -> float:
        return omega if start <= t <= stop else 0.0

    def chirp(t: float) -> float:
        return 0.0

    return _sample(rabi, chirp, start, stop, grid)


def integrate_bloch(
    detuning: float,
    waveform: ControlWaveform,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> BlochState:
    """Final Bloch vector from the ground state (w = −1), no relaxation."""
    two_pi = 2.0 * math.pi

    def rhs(t: float, y: np.ndarray) -> list:
        u, v, w = y
        delta = two_pi * (detuning - waveform.chirp(t))
        omega = two_pi * waveform.rabi(t)
        return [-delta * v, delta * u + omega * w, -omega * v]

    try:
        solution = solve_ivp(
            rhs,
            (waveform.start, waveform.stop),
            [0.0, 0.0, -1.0],
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
    except (ValueError, ArithmeticError) as e:
        raise IntegrationError(detuning, str(e)) from e
    if not solution.success:
        raise IntegrationError(detuning, solution.message)
    u, v, w = solution.y[:, -1]
    return BlochState(float(u), float(v), float(w))


def transfer_curve(
    waveform: ControlWaveform,
    detunings: Iterable[float],
    rtol: float = RTOL,
    atol: float = ATOL,
) -> np.ndarray:
    return np.array([integrate_bloch(d, waveform, rtol, atol).transfer_probability for d in detunings])


def transfer_efficiency(
    p: SechPulseParams,
    weights: Union[None, AbsorptionProfile] = None,
    input_bandwidth: float = INPUT_BANDWIDTH,
    n_detunings: int = N_DETUNINGS,
) -> float:
    """Detuning-averaged transfer η_T.

    Without `weights` the average is uniform over the input bandwidth. With a comb
    profile, p(δ) is interpolated onto its absorbing bins inside that bandwidth and
    weighted by their depth.
    """
    if input_bandwidth <= 0 or n_detunings < 2:
        raise DomainError("input bandwidth must be > 0 and at least two detunings are needed")
    detunings = np.linspace(-input_bandwidth / 2, input_bandwidth / 2, n_detunings)
    if p.omega_max == 0:
        return 0.0
    curve = transfer_curve(sech_waveform(p), detunings)
    if weights is None:
        eta = float(np.mean(curve))
    else:
        freqs = weights.grid.frequencies
        mask = (np.abs(freqs) <= input_bandwidth / 2) & (weights.depth > 0)
        total = float(np.sum(weights.depth[mask]))
        if total <= 0:
            raise DomainError("comb weights are empty inside the input bandwidth")
        eta = float(np.sum(weights.depth[mask] * np.interp(freqs[mask], detunings, curve)) / total)
    logger.info("Transfer efficiency: eta_t=%.4f omega_max=%s chirp=%s points=%s", eta, p.omega_max, p.chirp_range, n_detunings)
    return eta
