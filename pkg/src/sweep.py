import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from .artifacts import csv_text
from .config import ConfigError, RunConfig, with_overrides
from .errors import SimulationError
from .logger import run_context
from .scenario import run_scenario

logger = logging.getLogger("afcsim.sweep")


@dataclass
class SweepResult:
    parameters: List[str]
    rows: List[Dict[str, object]] = field(default_factory=list)
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def output_columns(self) -> List[str]:
        columns: List[str] = []
        for row in self.rows:
            for key in row:
                if key not in columns and key not in self.parameters and key != "status":
                    columns.append(key)
        return columns

    def to_csv(self) -> str:
        outputs = self.output_columns
        header = self.parameters + outputs + ["status"]
        body = []
        for row in self.rows:
            values: List[object] = [row[p] for p in self.parameters]
            values += [row.get(column, math.nan) for column in outputs]
            values.append(row["status"])
            body.append(values)
        return csv_text(header, body)


def _numeric(results: Dict[str, object]) -> Dict[str, object]:
    return {k: v for k, v in results.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}


def run_sweep(config: RunConfig) -> SweepResult:
    """One scenario run per parameter tuple, first axis outermost.

    A failing point is logged and kept as a `status=error` row; the sweep goes on.
    """
    if config.sweep is None:
        raise ConfigError("sweep", "config has no sweep section")
    axes = config.sweep.axes
    names = [axis.parameter for axis in axes]
    result = SweepResult(parameters=names)
    stats = {"points": 0, "ok": 0, "errors": 0}
    base = {"general.kind": config.sweep.scenario}

    for point in itertools.product(*(axis.points() for axis in axes)):
        stats["points"] += 1
        row: Dict[str, object] = dict(zip(names, point))
        try:
            point_config = with_overrides(config, {**base, **row})
            with run_context(point=stats["points"]):
                report = run_scenario(point_config, tables=False)
            row.update(_numeric(report.results))
            row["status"] = "ok" if report.validity.ok else "flagged"
            stats["ok"] += 1
        except (ConfigError, SimulationError) as exc:
            logger.exception("Sweep point %s failed: %s", _describe(names, point), exc)
            row["status"] = "error"
            stats["errors"] += 1
        result.rows.append(row)

    result.stats = stats
    logger.info(
        "Sweep %s over %s: points=%s ok=%s errors=%s",
        config.sweep.scenario,
        ",".join(names),
        stats["points"],
        stats["ok"],
        stats["errors"],
    )
    return result


def _describe(names: Sequence[str], point: Sequence[float]) -> str:
    return " ".join(f"{name}={value:g}" for name, value in zip(names, point))
