"""
Tests for logging_config module.
"""

import io
import json
import logging
import sys
from unittest.mock import MagicMock, patch

from tentcocycle.logging_config import (
    PipelineLogger,
    RunIDFormatter,
    StructuredFormatter,
    configure_logging,
    get_logger,
    get_run_id,
    run_command,
    run_id,
    set_run_id,
)


def make_record(msg="Test message", level=logging.INFO, exc_info=None, **extra):
    record = logging.LogRecord(
        name="tentcocycle.test",
        level=level,
        pathname="",
        lineno=7,
        msg=msg,
        args=(),
        exc_info=exc_info,
    )
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestLoggingConfiguration:
    """Test logging configuration functionality."""

    def test_configure_logging_default(self):
        """Default configuration logs warnings to standard error."""
        configure_logging()

        root_logger = logging.getLogger()
        assert root_logger.level == logging.WARNING
        assert len(root_logger.handlers) == 1
        assert root_logger.handlers[0].stream is sys.stderr

    def test_configure_logging_with_level(self):
        """Level names are case-insensitive."""
        configure_logging(level="debug")

        assert logging.getLogger().level == logging.DEBUG

    def test_configure_logging_structured(self):
        configure_logging(use_structured=True)

        handler = logging.getLogger().handlers[0]
        assert isinstance(handler.formatter, StructuredFormatter)

    def test_configure_logging_with_run_id(self):
        configure_logging(include_run_id=True)

        handler = logging.getLogger().handlers[0]
        assert isinstance(handler.formatter, RunIDFormatter)

    def test_reconfigure_replaces_handler(self):
        """Reconfiguring does not stack handlers."""
        configure_logging()
        configure_logging(level="INFO")

        assert len(logging.getLogger().handlers) == 1

    def test_numeric_libraries_stay_quiet(self):
        configure_logging(level="DEBUG")

        assert logging.getLogger("sympy").level == logging.WARNING
        assert logging.getLogger("mpmath").level == logging.WARNING

    def test_custom_stream(self):
        stream = io.StringIO()
        configure_logging(level="INFO", include_run_id=False, stream=stream)

        get_logger("tentcocycle.bounds").info("k_P = 15")

        assert "k_P = 15" in stream.getvalue()
        configure_logging()


class TestRunContext:
    """Test the run id and command context."""

    def test_set_and_get_run_id(self):
        assert set_run_id("run42") == "run42"
        assert get_run_id() == "run42"

    def test_set_run_id_auto_generate(self):
        result = set_run_id()

        assert len(result) == 8
        assert get_run_id() == result

    def test_command_is_recorded(self):
        set_run_id("run7", command="bound")

        assert run_command.get() == "bound"


class TestFormatters:
    """Test the text and JSON formatters."""

    def test_text_formatter_includes_context(self):
        formatter = RunIDFormatter(fmt='%(run_id)s %(command)s: %(message)s')
        set_run_id("abc123", command="markov")

        assert "abc123 markov: Test message" in formatter.format(make_record())

    def test_text_formatter_without_context(self):
        formatter = RunIDFormatter(fmt='%(run_id)s %(command)s: %(message)s')
        run_id.set(None)
        run_command.set(None)

        assert "N/A -: Test message" in formatter.format(make_record())

    def test_structured_formatter_json_output(self):
        set_run_id("abc123", command="simulate")
        parsed = json.loads(StructuredFormatter().format(make_record()))

        assert parsed['level'] == 'INFO'
        assert parsed['logger'] == 'tentcocycle.test'
        assert parsed['message'] == 'Test message'
        assert parsed['run_id'] == 'abc123'
        assert parsed['command'] == 'simulate'
        assert parsed['line'] == 7
        assert 'timestamp' in parsed

    def test_structured_formatter_keeps_extra_fields(self):
        """Numeric context given through extra becomes top-level JSON fields."""
        parsed = json.loads(StructuredFormatter().format(make_record(n=5, k_P=15, D_P=float("inf"))))

        assert parsed['n'] == 5
        assert parsed['k_P'] == 15
        assert parsed['D_P'] == float("inf")
        assert 'msg' not in parsed

    def test_structured_formatter_with_exception(self):
        try:
            raise ZeroDivisionError("cannot normalize the zero function")
        except ZeroDivisionError:
            exc_info = sys.exc_info()

        parsed = json.loads(StructuredFormatter().format(make_record(level=logging.ERROR, exc_info=exc_info)))

        assert 'ZeroDivisionError: cannot normalize the zero function' in parsed['exception']


class TestPipelineLogger:
    """Test PipelineLogger convenience class."""

    @patch('tentcocycle.logging_config.get_logger')
    def test_info_success(self, mock_get_logger):
        mock_logger = MagicMock()
        mock_get_logger.return_value = mock_logger

        PipelineLogger("test").info_success("bound computed", k_P=15)

        mock_logger.log.assert_called_once_with(logging.INFO, "✅ bound computed", extra={"k_P": 15})

    @patch('tentcocycle.logging_config.get_logger')
    def test_error_with_fallback(self, mock_get_logger):
        mock_logger = MagicMock()
        mock_get_logger.return_value = mock_logger

        PipelineLogger("test").error_with_fallback("bracket failed", "using closed form")

        assert mock_logger.log.call_args_list[0].args == (logging.ERROR, "❌ bracket failed")
        assert mock_logger.log.call_args_list[1].args == (logging.INFO, "🔄 using closed form")

    @patch('tentcocycle.logging_config.get_logger')
    def test_warning_skip(self, mock_get_logger):
        mock_logger = MagicMock()
        mock_get_logger.return_value = mock_logger

        PipelineLogger("test").warning_skip("kappa outside the asymptotic regime", n=3)

        mock_logger.log.assert_called_once_with(
            logging.WARNING, "⚠️ kappa outside the asymptotic regime", extra={"n": 3}
        )

    @patch('tentcocycle.logging_config.get_logger')
    def test_plain_info_passes_context(self, mock_get_logger):
        mock_logger = MagicMock()
        mock_get_logger.return_value = mock_logger

        PipelineLogger("test").info("running simulate", seed=7, mode="float")

        mock_logger.info.assert_called_once_with("running simulate", extra={"seed": 7, "mode": "float"})


class TestGetLogger:
    """Test logger retrieval."""

    def test_same_name_same_instance(self):
        assert get_logger("tentcocycle.bounds") is get_logger("tentcocycle.bounds")
