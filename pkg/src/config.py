from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import DomainError
from .models import (
    CavityParams,
    CombParams,
    FrequencyGrid,
    PulseSpec,
    SechPulseParams,
    SpinParams,
    SpinWaveTimeline,
    ToothShape,
)

PRESETS_DIR = Path(__file__).resolve().parent.parent / "config" / "presets"
MAX_SWEEP_POINTS = 10_000

ScenarioKind = Literal["comb", "echo", "cavity", "bloch", "spinwave", "sweep", "design", "linewidth", "impedance"]
SweptKind = Literal["comb", "echo", "cavity", "bloch", "spinwave", "design", "linewidth", "impedance"]


class ConfigError(Exception):
    def __init__(self, key: Optional[str], reason: str, line: Optional[int] = None, column: Optional[int] = None):
        self.key = key
        self.reason = reason
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{key}: {reason}{where}" if key else f"{reason}{where}")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LogRotationSettings(_Section):
    max_bytes: int = Field(10 * 1024 * 1024, ge=1024)
    backup_count: int = Field(5, ge=1)


class GeneralSettings(_Section):
    kind: ScenarioKind = "echo"
    output_dir: str = "out"
    log_file: str = "logs/afcsim.log"
    log_level: str = Field("INFO", pattern=r"(?i)^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$")
    log_rotation: LogRotationSettings = Field(default_factory=LogRotationSettings)
    log_retention_days: int = Field(2, ge=0)


class GridSettings(_Section):
    n_points: int = Field(2**16, ge=1024)
    span_hz: float = Field(20e6, gt=0)

    @field_validator("n_points")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("n_points must be a power of two")
        return value

    def to_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.n_points, self.span_hz)


class CombSettings(_Section):
    peak_depth: float = Field(ge=0)
    finesse: float
    total_bandwidth_hz: float = Field(gt=0)
    tooth_spacing_hz: Optional[float] = Field(None, gt=0)
    echo_delay_s: Optional[float] = Field(None, gt=0)
    tooth_shape: ToothShape = ToothShape.SQUARE
    background_depth: float = Field(0.0, ge=0)

    @field_validator("finesse")
    @classmethod
    def _finesse(cls, value: float) -> float:
        if not value >= 1:
            raise ValueError("finesse ≥ 1")
        return value

    @model_validator(mode="after")
    def _spacing(self) -> "CombSettings":
        if (self.tooth_spacing_hz is None) == (self.echo_delay_s is None):
            raise ValueError("give exactly one of tooth_spacing_hz and echo_delay_s")
        if self.total_bandwidth_hz < self.spacing:
            raise ValueError("total_bandwidth_hz must be ≥ the tooth spacing")
        return self

    @property
    def spacing(self) -> float:
        return self.tooth_spacing_hz if self.tooth_spacing_hz is not None else 1.0 / self.echo_delay_s

    def to_params(self) -> CombParams:
        return CombParams(
            peak_depth=self.peak_depth,
            tooth_spacing=self.spacing,
            finesse=self.finesse,
            total_bandwidth=self.total_bandwidth_hz,
            tooth_shape=self.tooth_shape,
            background_depth=self.background_depth,
        )


class PulseSettings(_Section):
    fwhm_s: float = Field(450e-9, gt=0)
    center_s: Optional[float] = Field(None, gt=0)
    detuning_hz: float = 0.0
    window_s: Optional[float] = Field(None, gt=0)

    @property
    def center(self) -> float:
        return self.center_s if self.center_s is not None else 10.0 * self.fwhm_s

    def to_spec(self) -> PulseSpec:
        return PulseSpec(fwhm=self.fwhm_s, center=self.center, detuning=self.detuning_hz, window=self.window_s)


class CavitySettings(_Section):
    # r1 left out means impedance matched to the comb's average depth
    r1: Optional[float] = Field(None, gt=0, le=1)
    r2: float = Field(1.0, gt=0, le=1)
    epsilon: float = Field(0.0, ge=0, lt=1)
    fsr_hz: float = Field(500e6, gt=0)
    detuning_offset_hz: float = 0.0

    def to_params(self, r1: Optional[float] = None) -> CavityParams:
        return CavityParams(
            r1=self.r1 if r1 is None else r1,
            r2=self.r2,
            epsilon=self.epsilon,
            fsr=self.fsr_hz,
            detuning_offset=self.detuning_offset_hz,
        )


class ControlSettings(_Section):
    omega_max_hz: float = Field(250e3, ge=0)
    duration_s: float = Field(5e-6, gt=0)
    chirp_range_hz: float = Field(1.2e6, ge=0)
    # None keeps the full sech
    truncation_s: Optional[float] = Field(None, gt=0)
    input_bandwidth_hz: float = Field(0.5e6, gt=0)
    n_detunings: int = Field(51, ge=2)
    weighting: Literal["uniform", "comb"] = "uniform"
    curve_span_hz: float = Field(2e6, gt=0)
    curve_points: int = Field(81, ge=2)

    def to_params(self, center_time: float = 0.0) -> SechPulseParams:
        return SechPulseParams(
            omega_max=self.omega_max_hz,
            duration=self.duration_s,
            chirp_range=self.chirp_range_hz,
            truncation=math.inf if self.truncation_s is None else self.truncation_s,
            center_time=center_time,
        )


class SpinSettings(_Section):
    gamma_spin_hz: float = Field(26.5e3, ge=0)

    def to_params(self) -> SpinParams:
        return SpinParams(gamma_spin=self.gamma_spin_hz)


class TimelineSettings(_Section):
    input_center_s: float = Field(0.0, ge=0)
    control_first_s: float
    control_second_s: float


class BudgetSettings(_Section):
    measured_eta_2l: Optional[float] = Field(None, ge=0, le=1)
    eta_t: Optional[float] = Field(None, ge=0, le=1)
    overlap: float = Field(1.0, ge=0, le=1)
    output_stretch: float = Field(1.2, gt=0)


class WindowSettings(_Section):
    background_depth: float = Field(1.2, ge=0)
    width_hz: float = Field(15e6, ge=0)
    background_width_hz: Optional[float] = Field(None, gt=0)
    probe_span_hz: Optional[float] = Field(None, gt=0)


class DesignSettings(_Section):
    peak_depth: float = Field(gt=0)
    epsilon: float = Field(0.0, ge=0, lt=1)
    max_finesse: float = Field(20.0, gt=1)
    n_finesse: int = Field(200, ge=2)
    mode: Literal["cavity", "single_pass"] = "cavity"


class ImpedanceSettings(_Section):
    d_tilde: float = Field(ge=0)


class SweepAxis(_Section):
    parameter: str
    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None

    @model_validator(mode="after")
    def _range(self) -> "SweepAxis":
        ranged = (self.start, self.stop, self.step)
        if self.values is None and any(v is None for v in ranged):
            raise ValueError("give either values or start/stop/step")
        if self.values is not None and any(v is not None for v in ranged):
            raise ValueError("values and start/stop/step are exclusive")
        if self.values is None and not self.step > 0:
            raise ValueError("step must be > 0")
        if not all(math.isfinite(v) for v in self.points()):
            raise ValueError("sweep values must be finite")
        if not self.points():
            raise ValueError("sweep range is empty")
        return self

    def points(self) -> List[float]:
        if self.values is not None:
            return list(self.values)
        if not all(math.isfinite(v) for v in (self.start, self.stop, self.step)):
            return [math.nan]
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(max(count, 0))]


class SweepSettings(_Section):
    scenario: SweptKind = "echo"
    axes: List[SweepAxis] = Field(min_length=1, max_length=2)

    @model_validator(mode="after")
    def _size(self) -> "SweepSettings":
        total = math.prod(len(axis.points()) for axis in self.axes)
        if total > MAX_SWEEP_POINTS:
            raise ValueError(f"sweep has {total} points, limit is {MAX_SWEEP_POINTS}")
        return self


class RunConfig(_Section):
    general: GeneralSettings = Field(default_factory=GeneralSettings)
    grid: GridSettings = Field(default_factory=GridSettings)
    comb: Optional[CombSettings] = None
    pulse: PulseSettings = Field(default_factory=PulseSettings)
    cavity: Optional[CavitySettings] = None
    control: Optional[ControlSettings] = None
    spin: Optional[SpinSettings] = None
    timeline: Optional[TimelineSettings] = None
    budget: Optional[BudgetSettings] = None
    window: Optional[WindowSettings] = None
    design: Optional[DesignSettings] = None
    impedance: Optional[ImpedanceSettings] = None
    sweep: Optional[SweepSettings] = None

    @property
    def scenario(self) -> str:
        if self.general.kind == "sweep":
            return self.sweep.scenario if self.sweep is not None else "echo"
        return self.general.kind


REQUIRED_SECTIONS: Dict[str, tuple] = {
    "comb": ("comb",),
    "echo": ("comb",),
    "cavity": ("comb", "cavity"),
    "bloch": ("control",),
    "spinwave": ("comb", "control", "spin", "timeline"),
    "design": ("design",),
    "linewidth": ("cavity", "window"),
    "impedance": ("cavity", "impedance"),
}


def default_config() -> RunConfig:
    return RunConfig()


def _load_yaml(path: Path) -> Dict:
    if not path.exists():
        raise ConfigError(None, f"Config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark is not None else None
        column = mark.column + 1 if mark is not None else None
        raise ConfigError(None, f"YAML parse error: {exc.problem}", line=line, column=column) from exc
    if not isinstance(raw, dict):
        raise ConfigError(None, "top level of the config must be a mapping")
    return raw


def _first_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    key = ".".join(str(part) for part in error["loc"]) or None
    reason = error["msg"]
    if reason.startswith("Value error, "):
        reason = reason[len("Value error, "):]
    return ConfigError(key, reason)


def _lookup(config: RunConfig, dotted: str) -> Any:
    node: Any = config
    for part in dotted.split("."):
        if not isinstance(node, BaseModel) or part not in type(node).model_fields:
            raise ConfigError("sweep.parameter", f"unknown or unconfigured parameter {dotted}")
        node = getattr(node, part)
    return node


def _check_sweep(config: RunConfig) -> None:
    if config.general.kind == "sweep" and config.sweep is None:
        raise ConfigError("sweep", "kind sweep needs a sweep section")
    if config.sweep is None:
        return
    for axis in config.sweep.axes:
        value = _lookup(config, axis.parameter)
        if isinstance(value, (bool, BaseModel)) or not isinstance(value, (int, float, type(None))):
            raise ConfigError("sweep.parameter", f"{axis.parameter} is not numeric")


def _check_domain(config: RunConfig) -> None:
    if config.comb is None:
        return
    try:
        comb = config.comb.to_params()
    except DomainError as exc:
        raise ConfigError("comb", str(exc)) from exc
    if config.timeline is not None:
        try:
            SpinWaveTimeline(
                input_center=config.timeline.input_center_s,
                control_first=config.timeline.control_first_s,
                control_second=config.timeline.control_second_s,
                afc_delay=comb.echo_delay,
            )
        except DomainError as exc:
            raise ConfigError("timeline", str(exc)) from exc


def parse_config_dict(raw: Dict) -> RunConfig:
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise _first_error(exc) from exc
    for section in REQUIRED_SECTIONS[config.scenario]:
        if getattr(config, section) is None:
            raise ConfigError(section, f"section required for scenario {config.scenario}")
    _check_sweep(config)
    _check_domain(config)
    return config


def load_config(path: str | Path) -> RunConfig:
    return parse_config_dict(_load_yaml(Path(path)))


def resolve_config_source(name_or_path: str) -> Path:
    """Bare preset names map to config/presets/<name>.yaml; anything else is a path."""
    candidate = Path(name_or_path)
    if candidate.suffix or len(candidate.parts) > 1:
        return candidate
    return PRESETS_DIR / f"{name_or_path}.yaml"


def config_to_dict(config: RunConfig) -> Dict:
    return config.model_dump(mode="json", exclude_none=True)


def default_config_dict() -> Dict:
    return config_to_dict(default_config())


def with_overrides(config: RunConfig, updates: Dict[str, Any]) -> RunConfig:
    """Copy of `config` with dotted keys replaced, re-validated as a whole."""
    data = config_to_dict(config)
    for dotted, value in updates.items():
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return parse_config_dict(data)


def save_config_dict(data: Dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, allow_unicode=True, sort_keys=False)
