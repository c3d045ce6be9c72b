"""
Logging for tentcocycle runs.

Every record carries the run id and the command being run. Records go to
standard error so CSV/JSON on standard output stays machine-readable.
Numeric context passed through ``extra`` (``n=5``, ``kappa=...``) is kept as
top-level fields of the JSON lines.
"""

import json
import logging
import sys
import uuid
from contextvars import ContextVar
from typing import Any, Dict, Optional, TextIO

run_id: ContextVar[Optional[str]] = ContextVar('run_id', default=None)
run_command: ContextVar[Optional[str]] = ContextVar('run_command', default=None)

TEXT_FORMAT = '%(asctime)s [%(run_id)s %(command)s] %(levelname)s %(name)s: %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# numerical libraries that log at DEBUG or INFO on their own
QUIET_LOGGERS = ('sympy', 'mpmath', 'numpy')

_RESERVED = frozenset(vars(logging.LogRecord('', 0, '', 0, '', (), None))) | {'message', 'asctime'}


def _context() -> Dict[str, str]:
    return {'run_id': run_id.get() or "N/A", 'command': run_command.get() or "-"}


def record_context(record: logging.LogRecord) -> Dict[str, Any]:
    """Fields a caller attached with ``extra``, minus the ones we set ourselves."""
    return {
        k: v for k, v in vars(record).items()
        if k not in _RESERVED and k not in ('run_id', 'command')
    }


class RunIDFormatter(logging.Formatter):
    """Text formatter that stamps the run id and command on each record."""

    def format(self, record: logging.LogRecord) -> str:
        for key, value in _context().items():
            setattr(record, key, value)
        return super().format(record)


class StructuredFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            'timestamp': self.formatTime(record, DATE_FORMAT),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            **_context(),
            'function': record.funcName,
            'line': record.lineno,
        }
        entry.update(record_context(record))
        if record.exc_info:
            entry['exception'] = self.formatException(record.exc_info)
        # inf and nan are legitimate bound values
        return json.dumps(entry, default=str)


def configure_logging(
    level: str = "WARNING",
    use_structured: bool = False,
    include_run_id: bool = True,
    stream: Optional[TextIO] = None,
) -> None:
    """
    Install a single handler on the root logger.

    Args:
        level: Logging level name, any case
        use_structured: Emit JSON lines instead of text
        include_run_id: Prefix text lines with the run id and command
        stream: Target stream, standard error by default
    """
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    if use_structured:
        handler.setFormatter(StructuredFormatter())
    elif include_run_id:
        handler.setFormatter(RunIDFormatter(fmt=TEXT_FORMAT, datefmt=DATE_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(fmt='%(asctime)s %(levelname)s %(name)s: %(message)s', datefmt=DATE_FORMAT))

    root_logger.setLevel(getattr(logging, level.upper()))
    root_logger.addHandler(handler)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
    # numpy overflow/invalid RuntimeWarnings end up in the log, not on bare stderr
    logging.captureWarnings(True)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def set_run_id(new_id: Optional[str] = None, command: Optional[str] = None) -> str:
    """Start a run context; a short random id is generated when none is given."""
    if new_id is None:
        new_id = uuid.uuid4().hex[:8]
    run_id.set(new_id)
    if command is not None:
        run_command.set(command)
    return new_id


def get_run_id() -> Optional[str]:
    return run_id.get()


class PipelineLogger:
    """Status logging for pipelines: ✅ done, 🔄 fallback, ⚠️ skipped, ❌ failed."""

    def __init__(self, name: str):
        self.logger = get_logger(name)

    def _log(self, level: int, icon: str, message: str, context: Dict[str, Any]) -> None:
        self.logger.log(level, f"{icon} {message}", extra=context)

    def info_success(self, message: str, **context) -> None:
        self._log(logging.INFO, "✅", message, context)

    def info_fallback(self, message: str, **context) -> None:
        self._log(logging.INFO, "🔄", message, context)

    def warning_skip(self, message: str, **context) -> None:
        self._log(logging.WARNING, "⚠️", message, context)

    def error_with_fallback(self, message: str, fallback_msg: Optional[str] = None, **context) -> None:
        self._log(logging.ERROR, "❌", message, context)
        if fallback_msg:
            self.info_fallback(fallback_msg, **context)

    def info(self, message: str, **context) -> None:
        self.logger.info(message, extra=context)
