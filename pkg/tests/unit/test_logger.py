"""
Unit tests for logger module.
"""
import logging
import sys

import pytest
import structlog

from ellspin.utils.logger import add_app_context, configure_library_logging, get_logger, setup_logging


class TestLogger:
    """Test logger module."""

    def test_get_logger(self):
        """Test get_logger returns a logger instance."""
        logger = get_logger(__name__)
        assert logger is not None
        logger.info("test")

    def test_add_app_context(self):
        """Test add_app_context processor."""
        event_dict = {}
        mock_logger = logging.getLogger("test")
        result = add_app_context(mock_logger, "info", event_dict)

        assert result["app"] == "ellspin"

    def test_setup_logging_json_format(self):
        """Test setup_logging with JSON format."""
        setup_logging(log_level="INFO", log_format="json")
        logger = get_logger(__name__)

        logger.info("suite_started", suite="elliptic", seed=1)

    def test_setup_logging_console_format(self):
        """Test setup_logging with console format."""
        setup_logging(log_level="DEBUG", log_format="console")
        logger = get_logger(__name__)

        logger.debug("check_completed", check="dybe", residual=1e-15)

    def test_setup_logging_with_file(self, tmp_path):
        """Test setup_logging with log file."""
        log_file = tmp_path / "logs" / "ellspin.log"
        setup_logging(log_level="WARNING", log_format="json", log_file=log_file)

        logger = get_logger(__name__)
        logger.warning("check_flagged", check="freeze_left")

        assert log_file.exists()

    def test_logs_go_to_stderr(self):
        """Test the stream handler writes to stderr, leaving stdout for data."""
        setup_logging(log_level="INFO", log_format="console")

        streams = [h.stream for h in logging.getLogger().handlers if isinstance(h, logging.StreamHandler)]
        assert sys.stderr in streams
        assert sys.stdout not in streams

    def test_setup_logging_levels(self):
        """Test different log levels."""
        for level in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            setup_logging(log_level=level, log_format="console")
            assert logging.getLogger().level == getattr(logging, level)


class TestLibraryDefault:
    """Test the logging default installed on import."""

    @pytest.fixture(autouse=True)
    def pristine(self):
        root = logging.getLogger()
        handlers, level = root.handlers[:], root.level
        structlog.reset_defaults()
        root.setLevel(logging.WARNING)
        yield
        structlog.reset_defaults()
        root.handlers[:] = handlers
        root.setLevel(level)

    def test_configures_structlog(self):
        """Test the default counts as a structlog configuration."""
        configure_library_logging()
        assert structlog.is_configured()

    def test_quiet_below_warning(self, capsys, caplog):
        """Test debug and info events are dropped and nothing reaches stdout."""
        configure_library_logging()
        logger = get_logger("ellspin.harness")
        logger.debug("check_completed", check="dybe")
        logger.info("suite_started", suite="elliptic")
        logger.warning("check_flagged", check="dybe")

        assert capsys.readouterr().out == ""
        assert "check_completed" not in caplog.text
        assert "suite_started" not in caplog.text
        assert "check_flagged" in caplog.text

    def test_keeps_existing_configuration(self):
        """Test an application's own configuration is not replaced."""
        setup_logging(log_level="DEBUG", log_format="json")
        processors = structlog.get_config()["processors"]
        configure_library_logging()
        assert structlog.get_config()["processors"] == processors
