"""Buffered, single-writer output of reports and CSV tables."""

from __future__ import annotations

import logging
import os
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import yaml

from .models import AbsorptionProfile, ComplexResponse, PulseWaveform, Validity

logger = logging.getLogger("afcsim.artifacts")

VERSION_FILE = Path(__file__).resolve().parent.parent / "VERSION"
UNKNOWN_VERSION = "0.0.0"
NUMBER_FORMAT = ".11e"
REPORT_FILE = "report.txt"
RESULTS_MARKER = "# results"


@lru_cache(maxsize=None)
def package_version() -> str:
    """Version stamped into report headers, read once from the VERSION file."""
    try:
        text = VERSION_FILE.read_text(encoding="utf-8").strip()
    except OSError as exc:
        logger.warning("Cannot read %s: %s", VERSION_FILE, exc)
        return UNKNOWN_VERSION
    return text or UNKNOWN_VERSION


def format_number(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), NUMBER_FORMAT)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def columns_csv(header: Sequence[str], *columns: np.ndarray) -> str:
    return csv_text(header, zip(*columns))


def profile_csv(profile: AbsorptionProfile) -> str:
    return columns_csv(("freq_hz", "depth"), profile.grid.frequencies, profile.depth)


def response_csv(response: ComplexResponse) -> str:
    values = response.values
    return columns_csv(("freq_hz", "re", "im", "abs2"), response.grid.frequencies, values.real, values.imag, np.abs(values) ** 2)


def waveform_csv(pulse: PulseWaveform, t_stop: Optional[float] = None) -> str:
    times = pulse.grid.times
    keep = slice(None) if t_stop is None else times < t_stop
    envelope = pulse.envelope[keep]
    return columns_csv(("time_s", "re", "im", "abs2"), times[keep], envelope.real, envelope.imag, np.abs(envelope) ** 2)


def curve_csv(detunings: np.ndarray, probabilities: np.ndarray) -> str:
    return columns_csv(("detuning_hz", "transfer_prob"), detunings, probabilities)


def render_report(
    config: Mapping,
    results: Mapping[str, object],
    validity: Validity,
    version: Optional[str] = None,
    generated: Optional[datetime] = None,
) -> str:
    """Header line, echoed config as YAML, then `key = value` results."""
    stamp = (generated or datetime.now(timezone.utc)).isoformat(timespec="seconds")
    parts = [f"# generated {stamp} afcsim {version or package_version()}"]
    parts.append(yaml.safe_dump({"config": dict(config)}, allow_unicode=True, sort_keys=False).rstrip("\n"))
    parts.append(RESULTS_MARKER)
    for key, value in results.items():
        parts.append(f"{key} = {format_number(value)}")
    parts.append(f"valid = {format_number(validity.ok)}")
    for reason in validity.reasons:
        parts.append(f"validity_reason = {reason}")
    return "\n".join(parts) + "\n"


def read_report(text: str) -> tuple[Dict, Dict[str, str]]:
    """Echoed config dict and raw result strings of a rendered report."""
    lines = text.splitlines()
    marker = lines.index(RESULTS_MARKER)
    config = yaml.safe_load("\n".join(lines[1:marker])) or {}
    results: Dict[str, str] = {}
    for line in lines[marker + 1:]:
        key, _, value = line.partition(" = ")
        results.setdefault(key, value)
    return config.get("config", {}), results


class ArtifactWriter:
    """
    Collects named text artifacts in memory and writes them in one go:
    - nothing touches the disk before flush()
    - each file lands through a temporary sibling and os.replace
    - a failed flush removes the temporaries it created
    """

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self._pending: Dict[str, str] = {}
        self._dirty = False

    @property
    def names(self) -> List[str]:
        return list(self._pending)

    def add(self, name: str, text: str) -> None:
        if Path(name).name != name:
            raise ValueError(f"artifact name must be a plain file name: {name}")
        self._pending[name] = text
        self._dirty = True

    def add_all(self, artifacts: Mapping[str, str]) -> None:
        for name, text in artifacts.items():
            self.add(name, text)

    def flush(self) -> List[Path]:
        if not self._dirty:
            return []
        self.out_dir.mkdir(parents=True, exist_ok=True)
        staged: List[tuple[Path, Path]] = []
        try:
            for name, text in self._pending.items():
                target = self.out_dir / name
                temp = target.with_name(f".{name}.tmp")
                temp.write_text(text, encoding="utf-8")
                staged.append((temp, target))
        except OSError:
            for temp, _ in staged:
                temp.unlink(missing_ok=True)
            raise
        for temp, target in staged:
            os.replace(temp, target)
        self._dirty = False
        logger.info("Artifacts written: dir=%s files=%s", self.out_dir, len(staged))
        return [target for _, target in staged]
