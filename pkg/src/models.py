from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError, GridError

GAUSSIAN_AREA_FACTOR = math.sqrt(math.pi / (4.0 * math.log(2.0)))
GUARD_FRACTION = 0.1
MIN_GRID_POINTS = 2**10


class ToothShape(str, Enum):
    SQUARE = "square"
    GAUSSIAN = "gaussian"


class Lineshape(str, Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Validity:
    ok: bool = True
    reasons: Tuple[str, ...] = ()

    @classmethod
    def failed(cls, reason: str) -> "Validity":
        return cls(ok=False, reasons=(reason,))

    def merge(self, other: "Validity") -> "Validity":
        return Validity(ok=self.ok and other.ok, reasons=self.reasons + other.reasons)

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.reasons)


@dataclass(frozen=True)
class CombParams:
    peak_depth: float
    tooth_spacing: float
    finesse: float
    total_bandwidth: float
    tooth_shape: ToothShape = ToothShape.SQUARE
    background_depth: float = 0.0

    def __post_init__(self) -> None:
        if self.peak_depth < 0:
            raise DomainError("peak_depth must be ≥ 0")
        if self.tooth_spacing <= 0:
            raise DomainError("tooth_spacing must be > 0")
        if self.finesse < 1:
            raise DomainError("finesse ≥ 1")
        if self.total_bandwidth < self.tooth_spacing:
            raise DomainError("total_bandwidth must be ≥ tooth_spacing")
        if self.background_depth < 0:
            raise DomainError("background_depth must be ≥ 0")

    @property
    def tooth_width(self) -> float:
        return self.tooth_spacing / self.finesse

    @property
    def echo_delay(self) -> float:
        return 1.0 / self.tooth_spacing

    @property
    def tooth_count(self) -> int:
        return int(math.floor(self.total_bandwidth / self.tooth_spacing + 1e-9))

    @property
    def average_depth(self) -> float:
        """Comb depth averaged over one period (d̃), excluding the background."""
        d_tilde = self.peak_depth / self.finesse
        if self.tooth_shape is ToothShape.GAUSSIAN:
            d_tilde *= GAUSSIAN_AREA_FACTOR
        return d_tilde


@dataclass(frozen=True)
class SpinParams:
    gamma_spin: float
    lineshape: Lineshape = Lineshape.GAUSSIAN

    def __post_init__(self) -> None:
        if self.gamma_spin < 0:
            raise DomainError("gamma_spin must be ≥ 0")


@dataclass(frozen=True)
class MaterialParams:
    """153Eu:Y2SiO5 site 1 defaults; frequencies relative to f0."""

    alpha: float = 1.2
    length: float = 1.0
    inhom_broadening: float = 650e6
    homog_linewidth: float = 0.0
    f_plus_offset: float = 90.0e6
    f_minus_offset: float = -51e6

    def __post_init__(self) -> None:
        if self.alpha * self.length < 0:
            raise DomainError("alpha·L must be ≥ 0")

    @property
    def optical_depth(self) -> float:
        return self.alpha * self.length

    @property
    def inhomogeneous_limit(self) -> bool:
        # the comb description only holds for Γ_in ≫ γ_h
        return self.homog_linewidth * 100.0 <= self.inhom_broadening


@dataclass(frozen=True)
class FrequencyGrid:
    n_points: int
    span: float

    def __post_init__(self) -> None:
        n = self.n_points
        if n < MIN_GRID_POINTS or n & (n - 1):
            raise GridError(f"n_points must be a power of two ≥ {MIN_GRID_POINTS}, got {n}")
        if self.span <= 0:
            raise GridError("span must be > 0")

    @property
    def resolution(self) -> float:
        return self.span / self.n_points

    @property
    def zero_index(self) -> int:
        return self.n_points // 2

    @property
    def frequencies(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.zero_index) * self.resolution

    @property
    def guard_bins(self) -> int:
        return int(math.ceil(GUARD_FRACTION * self.n_points))

    @property
    def usable_half_width(self) -> float:
        """Largest |f| that absorption may reach without touching a guard bin.

        The upper edge has one bin fewer than the lower, so the half-bin margin keeps
        the last absorbing bin below the first upper guard bin.
        """
        return (self.zero_index - self.guard_bins - 0.5) * self.resolution

    def time_grid(self) -> "TimeGrid":
        return TimeGrid(self.n_points, self.n_points / self.span)


@dataclass(frozen=True)
class TimeGrid:
    n_points: int
    duration: float

    def __post_init__(self) -> None:
        if self.n_points < 2 or self.duration <= 0:
            raise GridError("time grid needs ≥ 2 points and a positive duration")

    @property
    def dt(self) -> float:
        return self.duration / self.n_points

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.n_points, 1.0 / self.dt)


@dataclass(frozen=True, eq=False)
class AbsorptionProfile:
    grid: FrequencyGrid
    depth: np.ndarray

    def __post_init__(self) -> None:
        depth = np.asarray(self.depth, dtype=float)
        if depth.shape != (self.grid.n_points,):
            raise GridError("depth array does not match the frequency grid")
        if not np.all(np.isfinite(depth)) or np.any(depth < 0):
            raise DomainError("optical depth must be finite and ≥ 0")
        object.__setattr__(self, "depth", depth)

    def check_guard_band(self, tolerance: float = 1e-9) -> None:
        guard = self.grid.guard_bins
        edges = np.concatenate([self.depth[:guard], self.depth[-guard:]])
        if np.max(edges, initial=0.0) > tolerance:
            raise GridError("absorption reaches the 10% guard band at the grid edges")

    def mean_depth(self, f_lo: float, f_hi: float) -> float:
        freqs = self.grid.frequencies
        mask = (freqs >= f_lo) & (freqs < f_hi)
        if not np.any(mask):
            raise DomainError("empty frequency interval")
        return float(np.mean(self.depth[mask]))


@dataclass(frozen=True, eq=False)
class ComplexResponse:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise GridError("response array does not match the frequency grid")
        object.__setattr__(self, "values", values)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def squared(self) -> "ComplexResponse":
        return ComplexResponse(self.grid, self.values**2)

    def impulse_response(self) -> np.ndarray:
        return np.fft.ifft(np.fft.ifftshift(self.values))


@dataclass(frozen=True, eq=False)
class PulseWaveform:
    grid: TimeGrid
    envelope: np.ndarray
    detuning: float = 0.0
    center: float = 0.0
    fwhm: float = 0.0
    source_energy: Optional[float] = None

    def __post_init__(self) -> None:
        envelope = np.asarray(self.envelope, dtype=complex)
        if envelope.shape != (self.grid.n_points,):
            raise GridError("envelope does not match the time grid")
        object.__setattr__(self, "envelope", envelope)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.envelope) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.intensity) * self.grid.dt)

    def energy_between(self, t_start: float, t_stop: float) -> float:
        times = self.grid.times
        mask = (times >= t_start) & (times < t_stop)
        return float(np.sum(self.intensity[mask]) * self.grid.dt)

    def scaled(self, factor: complex) -> "PulseWaveform":
        return PulseWaveform(self.grid, self.envelope * factor, self.detuning, self.center, self.fwhm, self.source_energy)


@dataclass(frozen=True)
class CavityParams:
    r1: float
    r2: float = 1.0
    epsilon: float = 0.0
    fsr: float = 500e6
    detuning_offset: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.r1 <= 1:
            raise DomainError("R1 must be in (0, 1]")
        if not 0 < self.r2 <= 1:
            raise DomainError("R2 must be in (0, 1]")
        if not 0 <= self.epsilon < 1:
            raise DomainError("epsilon must be in [0, 1)")
        if self.fsr <= 0:
            raise DomainError("fsr must be > 0")


@dataclass(frozen=True)
class SechPulseParams:
    omega_max: float
    duration: float
    chirp_range: float
    truncation: float = math.inf
    center_time: float = 0.0

    def __post_init__(self) -> None:
        if self.omega_max < 0:
            raise DomainError("omega_max must be ≥ 0")
        if self.duration <= 0:
            raise DomainError("T must be > 0")
        if self.chirp_range < 0:
            raise DomainError("delta_nu must be ≥ 0")
        if self.truncation <= 0:
            raise DomainError("truncation must be > 0")


@dataclass(frozen=True)
class BlochState:
    u: float
    v: float
    w: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.u**2 + self.v**2 + self.w**2)

    @property
    def transfer_probability(self) -> float:
        return (1.0 + self.w) / 2.0


@dataclass(frozen=True)
class EfficiencyBudget:
    eta_2l: float
    eta_t: float
    eta_sw: float
    overlap: float
    eta_total: float
    validity: Validity = field(default_factory=Validity)


@dataclass(frozen=True)
class SpinWaveTimeline:
    input_center: float
    control_first: float
    control_second: float
    afc_delay: float

    def __post_init__(self) -> None:
        if not self.input_center < self.control_first < self.input_center + self.afc_delay:
            raise DomainError("first control pulse must fall between input and AFC echo")
        if self.control_second <= self.control_first:
            raise DomainError("second control pulse must follow the first")

    @property
    def spin_wave_time(self) -> float:
        return self.control_second - self.control_first

    @property
    def output_time(self) -> float:
        return self.input_center + self.afc_delay + self.spin_wave_time


@dataclass(frozen=True)
class PulseSpec:
    """Input pulse: intensity FWHM, centre time and carrier detuning; `window` overrides the echo window."""

    fwhm: float
    center: float
    detuning: float = 0.0
    window: Optional[float] = None

    def __post_init__(self) -> None:
        if self.fwhm <= 0 or self.center <= 0:
            raise DomainError("pulse fwhm and centre must be > 0")
        if self.window is not None and self.window <= 0:
            raise DomainError("echo window must be > 0")
