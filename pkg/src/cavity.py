"""Asymmetric Fabry–Perot cavity around the comb medium."""

from __future__ import annotations

import logging
import math
from typing import Iterable, Optional

import numpy as np

from .errors import GridError, ResonanceNotFoundError
from .models import CavityParams, ComplexResponse, FrequencyGrid, PulseWaveform
from .propagation import echo_efficiency, propagate, spectral_fwhm
from .spectrum import kramers_kronig_response, mean_group_delay, transparency_window

logger = logging.getLogger("afcsim.cavity")

MIN_DIP_CONTRAST = 0.05
MIN_SAMPLES_PER_LINEWIDTH = 8
NARROWBAND_RATIO = 0.2
# 50/50 splitter in the detection path; external to the memory efficiency
DETECTION_LOSS = 0.25


def round_trip_amplitude(cav: CavityParams) -> float:
    return math.sqrt(cav.r1 * cav.r2 * (1.0 - cav.epsilon))


def cavity_finesse(cav: CavityParams) -> float:
    """Airy finesse FSR/FWHM of the empty cavity; nan when no resonance can be resolved."""
    rho = round_trip_amplitude(cav)
    x = (1.0 - rho) / (2.0 * math.sqrt(rho))
    if x >= 1.0:
        return math.nan
    return math.pi / (2.0 * math.asin(x))


def empty_linewidth(cav: CavityParams) -> float:
    finesse = cavity_finesse(cav)
    if math.isnan(finesse):
        return math.inf
    return cav.fsr / finesse


def narrowed_linewidth(cav: CavityParams, group_delay: float) -> float:
    """Linewidth with an intracavity single-pass group delay added to the round trip."""
    round_trip = abs(1.0 / cav.fsr + 2.0 * group_delay)
    return empty_linewidth(cav) / (cav.fsr * round_trip)


def reflection_response(cav: CavityParams, medium: ComplexResponse) -> ComplexResponse:
    """Amplitude reflection r(f) of the cavity with the medium passed twice per round trip."""
    grid = medium.grid
    linewidth = empty_linewidth(cav)
    if math.isfinite(linewidth) and grid.resolution > linewidth / MIN_SAMPLES_PER_LINEWIDTH:
        raise GridError(
            f"grid resolution {grid.resolution:g} Hz cannot resolve a {linewidth:g} Hz cavity resonance"
        )
    if math.isfinite(linewidth) and grid.span < linewidth:
        logger.warning("Grid span %.3g Hz is narrower than the empty-cavity linewidth %.3g Hz", grid.span, linewidth)
    # same e^{+i2πft} convention as the medium: the round trip is a delay 1/FSR
    psi = -2.0 * math.pi * (grid.frequencies - cav.detuning_offset) / cav.fsr
    loop = math.sqrt(1.0 - cav.epsilon) * medium.values**2 * np.exp(1j * psi)
    numerator = math.sqrt(cav.r1) - math.sqrt(cav.r2) * loop
    denominator = 1.0 - math.sqrt(cav.r1 * cav.r2) * loop
    return ComplexResponse(grid, numerator / denominator)


def reflected_pulse(cav: CavityParams, medium: ComplexResponse, pulse: PulseWaveform) -> PulseWaveform:
    response = reflection_response(cav, medium)
    bandwidth = spectral_fwhm(pulse.fwhm)
    tau = mean_group_delay(medium, 2.0 * bandwidth, center=pulse.detuning)
    linewidth = narrowed_linewidth(cav, tau)
    if bandwidth > NARROWBAND_RATIO * linewidth:
        logger.warning(
            "Pulse bandwidth %.3g Hz is not narrow against the cavity linewidth %.3g Hz", bandwidth, linewidth
        )
    return propagate(pulse, response)


def cavity_echo_efficiency(
    cav: CavityParams,
    medium: ComplexResponse,
    pulse: PulseWaveform,
    echo_time: float,
    window: Optional[float] = None,
) -> float:
    out = reflected_pulse(cav, medium, pulse)
    return echo_efficiency(out, echo_time, window)


def cavity_linewidth(cav: CavityParams, medium: ComplexResponse, probe_span: Optional[float] = None) -> float:
    """FWHM of the reflection dip in |r|² nearest the comb centre."""
    grid = medium.grid
    span = min(cav.fsr, grid.span) if probe_span is None else probe_span
    reflectance = np.abs(reflection_response(cav, medium).values) ** 2
    freqs = grid.frequencies
    probe = np.flatnonzero(np.abs(freqs - cav.detuning_offset) <= span / 2)
    if probe.size < 3:
        raise ResonanceNotFoundError("probe span holds fewer than three samples")
    local = reflectance[probe]
    dip = int(np.argmin(local))
    top, bottom = float(np.max(local)), float(local[dip])
    if top <= 0 or (top - bottom) / top < MIN_DIP_CONTRAST:
        raise ResonanceNotFoundError(f"reflection dip contrast below {MIN_DIP_CONTRAST:.0%}")
    half = bottom + (top - bottom) / 2
    edges = []
    for step in (-1, 1):
        i = dip
        while 0 <= i + step < local.size and local[i + step] < half:
            i += step
        j = i + step
        if not 0 <= j < local.size:
            raise ResonanceNotFoundError("resonance wider than the probe span")
        f_in, f_out = freqs[probe[i]], freqs[probe[j]]
        r_in, r_out = local[i], local[j]
        edges.append(f_in + (half - r_in) * (f_out - f_in) / (r_out - r_in))
    return float(edges[1] - edges[0])


def impedance_scan(cav: CavityParams, depths: Iterable[float], grid: FrequencyGrid) -> np.ndarray:
    """|r|² at resonance for a uniform medium of each average depth d̃."""
    values = []
    for d_tilde in depths:
        medium = kramers_kronig_response(transparency_window(d_tilde, 0.0, grid))
        r = reflection_response(cav, medium).values[grid.zero_index + int(round(cav.detuning_offset / grid.resolution))]
        values.append(abs(r) ** 2)
    return np.asarray(values)
