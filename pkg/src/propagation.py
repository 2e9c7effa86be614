"""Linear pulse propagation through a sampled transfer function, and echo read-out."""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from .errors import GridError, NoEchoFoundError, WindowError
from .models import ComplexResponse, PulseWaveform, TimeGrid

logger = logging.getLogger("afcsim.propagation")

EDGE_DECAY = 1e-6
MIN_SAMPLES_PER_FWHM = 10
ECHO_WINDOW_FWHMS = 4.0
MIN_WINDOW_FWHMS = 2.5
INPUT_GUARD_FWHMS = 3.0
WINDOW_START_FWHMS = 1.25
NOISE_FLOOR = 1e-9


def gaussian_pulse(fwhm: float, center: float, grid: TimeGrid, detuning: float = 0.0) -> PulseWaveform:
    """Unit-energy Gaussian envelope; `fwhm` is the intensity FWHM in seconds."""
    if fwhm < MIN_SAMPLES_PER_FWHM * grid.dt:
        raise GridError(f"pulse fwhm {fwhm:g} s spans fewer than {MIN_SAMPLES_PER_FWHM} time steps")
    times = grid.times
    amplitude = np.exp(-2.0 * math.log(2.0) * ((times - center) / fwhm) ** 2)
    edge = max(amplitude[0], amplitude[-1])
    if edge >= EDGE_DECAY:
        raise GridError(f"pulse centred at {center:g} s does not decay inside the time grid")
    envelope = amplitude * np.exp(2j * math.pi * detuning * times)
    envelope /= math.sqrt(np.sum(np.abs(envelope) ** 2) * grid.dt)
    return PulseWaveform(grid, envelope, detuning=detuning, center=center, fwhm=fwhm)


def spectral_fwhm(fwhm: float) -> float:
    """Transform-limited intensity-spectrum FWHM of a Gaussian pulse."""
    return 2.0 * math.log(2.0) / (math.pi * fwhm)


def pulse_spectrum(pulse: PulseWaveform) -> np.ndarray:
    """Spectral amplitude on the conjugate frequency grid, zero frequency at the centre bin."""
    return np.fft.fftshift(np.fft.fft(pulse.envelope)) * pulse.grid.dt


def _check_conjugate(pulse: PulseWaveform, response: ComplexResponse) -> None:
    freq_grid = response.grid
    if freq_grid.n_points != pulse.grid.n_points or not math.isclose(freq_grid.span * pulse.grid.dt, 1.0, rel_tol=1e-9):
        raise GridError("pulse time grid and response frequency grid are not conjugate")


def propagate(pulse: PulseWaveform, response: ComplexResponse) -> PulseWaveform:
    _check_conjugate(pulse, response)
    spectrum = np.fft.fft(pulse.envelope) * np.fft.ifftshift(response.values)
    return PulseWaveform(
        pulse.grid,
        np.fft.ifft(spectrum),
        detuning=pulse.detuning,
        center=pulse.center,
        fwhm=pulse.fwhm,
        source_energy=pulse.energy,
    )


def default_window(out: PulseWaveform, echo_time: float) -> float:
    return min(ECHO_WINDOW_FWHMS * out.fwhm, echo_time - out.center)


def echo_efficiency(
    out: PulseWaveform,
    echo_time: float,
    window: Optional[float] = None,
    input_energy: Optional[float] = None,
) -> float:
    """Energy inside the echo window divided by the input pulse energy."""
    reference = input_energy if input_energy is not None else out.source_energy
    if not reference:
        raise WindowError("input pulse energy unknown; pass input_energy or use a propagated waveform")
    width = default_window(out, echo_time) if window is None else window
    if width < MIN_WINDOW_FWHMS * out.fwhm:
        raise WindowError(f"echo window {width:g} s is shorter than {MIN_WINDOW_FWHMS:g} input FWHM")
    start, stop = echo_time - width / 2, echo_time + width / 2
    if start < out.center + WINDOW_START_FWHMS * out.fwhm:
        raise WindowError("echo window overlaps the transmitted input pulse")
    if stop > out.grid.duration:
        raise WindowError("echo window extends past the end of the time grid")
    return out.energy_between(start, stop) / reference


def first_echo_peak_time(out: PulseWaveform, input_center: Optional[float] = None) -> float:
    center = out.center if input_center is None else input_center
    times = out.grid.times
    after = times > center + INPUT_GUARD_FWHMS * out.fwhm
    intensity = out.intensity
    if not np.any(after):
        raise NoEchoFoundError("no samples after the transmitted input pulse")
    candidates = np.where(after, intensity, 0.0)
    peak = int(np.argmax(candidates))
    if candidates[peak] <= NOISE_FLOOR * np.max(intensity):
        raise NoEchoFoundError("no echo above the numerical noise floor")
    return float(times[peak])


def centroid(pulse: PulseWaveform, t_start: float, t_stop: float) -> float:
    """Intensity-weighted mean arrival time inside [t_start, t_stop)."""
    times = pulse.grid.times
    mask = (times >= t_start) & (times < t_stop)
    weights = pulse.intensity[mask]
    return float(np.sum(times[mask] * weights) / np.sum(weights))
