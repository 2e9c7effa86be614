import contextlib
import contextvars
import logging
import os
import time
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Dict, Iterator

from .config import GeneralSettings

LOGGER_NAME = "afcsim"
LEVEL_ENV = "AFC_LOG_LEVEL"
RECORD_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s%(context)s"

_run_context: contextvars.ContextVar[Dict[str, str]] = contextvars.ContextVar("afcsim_run_context", default={})


@contextlib.contextmanager
def run_context(**fields: object) -> Iterator[None]:
    """Tag every record logged inside the block with `key=value` fields, e.g. the scenario or sweep point."""
    merged = {**_run_context.get(), **{key: str(value) for key, value in fields.items()}}
    token = _run_context.set(merged)
    try:
        yield
    finally:
        _run_context.reset(token)


class RunContextFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        fields = _run_context.get()
        record.context = " [" + " ".join(f"{k}={v}" for k, v in fields.items()) + "]" if fields else ""
        return True


class CompactFileFormatter(logging.Formatter):
    """One line per record: the exception is reduced to `(Type: message)`, tracebacks stay on the console."""

    def formatException(self, exc_info) -> str:
        exc_type, exc, _ = exc_info
        return f"({exc_type.__name__}: {exc})"

    def formatStack(self, stack_info: str) -> str:
        return ""

    def format(self, record: logging.LogRecord) -> str:
        saved = record.exc_text
        record.exc_text = None
        try:
            text = super().format(record)
        finally:
            record.exc_text = saved
        return text.replace("\n", " | ").rstrip(" |")


def configure_logging(settings: GeneralSettings, quiet: bool = False) -> logging.Logger:
    log_path = Path(settings.log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    _cleanup_old_logs(log_path, settings.log_retention_days)

    logger = logging.getLogger(LOGGER_NAME)
    level_name = os.environ.get(LEVEL_ENV) or settings.log_level
    requested_level = getattr(logging, level_name.upper(), logging.INFO)
    file_level = max(logging.INFO, requested_level)
    console_level = logging.ERROR if quiet else logging.WARNING
    logger.setLevel(min(file_level, console_level))
    logger.propagate = False

    for existing in list(logger.handlers):
        logger.removeHandler(existing)
        existing.close()

    context = RunContextFilter()
    handler = RotatingFileHandler(
        log_path,
        maxBytes=settings.log_rotation.max_bytes,
        backupCount=settings.log_rotation.backup_count,
        encoding="utf-8",
    )
    handler.setLevel(file_level)
    handler.setFormatter(CompactFileFormatter(RECORD_FORMAT))
    handler.addFilter(context)
    logger.addHandler(handler)

    console = logging.StreamHandler()
    console.setLevel(console_level)
    console.setFormatter(logging.Formatter(RECORD_FORMAT))
    console.addFilter(context)
    logger.addHandler(console)

    logger.debug("Logging configured, file: %s", log_path)
    return logger


def _cleanup_old_logs(log_path: Path, retention_days: int) -> None:
    """Drop rotated backups older than the retention period; the live log is truncated instead."""
    if retention_days <= 0:
        return
    cutoff = time.time() - retention_days * 86400
    for entry in sorted(log_path.parent.glob(f"{log_path.name}*")):
        try:
            stale = entry.is_file() and entry.stat().st_mtime < cutoff
        except OSError:
            continue
        if not stale:
            continue
        if entry == log_path:
            entry.write_text("", encoding="utf-8")
        else:
            entry.unlink(missing_ok=True)
