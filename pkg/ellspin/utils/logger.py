"""
Structured logging configuration using structlog.

Library use: importing ``ellspin`` installs a quiet default that routes
events through stdlib logging, so only warnings and errors reach stderr
until the embedding application configures logging itself. The command
line calls ``setup_logging`` with the configured level and format.
"""
import logging
import sys
from pathlib import Path
from typing import Optional
import structlog
from structlog.types import EventDict, Processor


def add_app_context(logger: logging.Logger, method_name: str, event_dict: EventDict) -> EventDict:
    """Tag every event with the application name."""
    event_dict["app"] = "ellspin"
    return event_dict


def configure_library_logging() -> None:
    """
    Default for ellspin used as a library.

    Events are filtered by the stdlib level of their logger and rendered as
    key=value text. With no handlers installed, stdlib logging prints
    WARNING and above to stderr and drops everything else. Does nothing
    once structlog has been configured.
    """
    if structlog.is_configured():
        return
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            add_app_context,
            structlog.processors.KeyValueRenderer(key_order=["event"]),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


def setup_logging(
    log_level: str = "WARNING",
    log_format: str = "console",
    log_file: Optional[Path] = None
) -> None:
    """
    Configure structured logging for the command line.

    Log records go to stderr (and to log_file when given); stdout carries
    the data written by commands.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_format: Output format ('json' or 'console')
        log_file: Optional path to log file
    """
    numeric_level = getattr(logging, log_level.upper(), logging.WARNING)

    processors: list[Processor] = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        add_app_context,
    ]
    if log_format == "json":
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    for handler in handlers:
        handler.setLevel(numeric_level)

    logging.basicConfig(
        format="%(message)s",
        level=numeric_level,
        handlers=handlers,
        force=True
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Logger for a module (usually called with __name__)."""
    return structlog.get_logger(name)
