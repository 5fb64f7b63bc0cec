"""
Utility functions and helpers for ellspin.
"""

from ellspin.utils.logger import configure_library_logging, setup_logging, get_logger

__all__ = [
    "configure_library_logging",
    "setup_logging",
    "get_logger"
]
