"""
Logging system for the DP KDE toolkit.

Diagnostics go to standard error (colored when attached to a terminal) and,
when a log file is configured, to a size-rotating file. Standard output is left
to machine-readable results.
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Dict, Optional

import colorlog

ROOT_LOGGER_NAME = "dp_kde"


class StructuredLogger:
    """Named logger with a colored stderr handler and optional file rotation."""

    def __init__(self, name: str, log_config):
        """Initialize logger.

        Args:
            name: Logger name, placed under the ``dp_kde`` hierarchy
            log_config: LogConfig-like object (level, file_path, max_file_size, backup_count)
        """
        self.name = name
        self.log_config = log_config
        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        logger = logging.getLogger(f"{ROOT_LOGGER_NAME}.{self.name}")
        logger.setLevel(self.log_config.level)
        logger.handlers.clear()

        logger.addHandler(self._create_console_handler())

        if getattr(self.log_config, "file_path", None):
            Path(self.log_config.file_path).parent.mkdir(parents=True, exist_ok=True)
            logger.addHandler(self._create_file_handler())

        # Handlers live here; the root logger stays untouched so pytest's caplog still sees records
        logger.propagate = True
        return logger

    def _create_console_handler(self) -> logging.Handler:
        handler = colorlog.StreamHandler(sys.stderr)
        handler.setLevel(self.log_config.level)
        handler.setFormatter(
            colorlog.ColoredFormatter(
                "%(log_color)s[%(asctime)s]%(reset)s %(levelname)-8s %(name)s - %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
                log_colors={
                    "DEBUG": "cyan",
                    "INFO": "green",
                    "WARNING": "yellow",
                    "ERROR": "red",
                    "CRITICAL": "red,bg_white",
                },
                no_color=not sys.stderr.isatty(),
            )
        )
        return handler

    def _create_file_handler(self) -> logging.Handler:
        handler = logging.handlers.RotatingFileHandler(
            self.log_config.file_path,
            maxBytes=self.log_config.max_file_size * 1024 * 1024,
            backupCount=self.log_config.backup_count,
            encoding="utf-8",
        )
        handler.setLevel(self.log_config.level)
        handler.setFormatter(
            logging.Formatter(
                "[%(asctime)s] %(levelname)-8s %(name)s - %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        )
        return handler

    def set_level(self, level: str) -> None:
        """Change the threshold of the logger and all its handlers."""
        self.logger.setLevel(level)
        for handler in self.logger.handlers:
            handler.setLevel(level)

    def debug(self, message: str, *args, **kwargs) -> None:
        self.logger.debug(message, *args, **kwargs)

    def info(self, message: str, *args, **kwargs) -> None:
        self.logger.info(message, *args, **kwargs)

    def warning(self, message: str, *args, **kwargs) -> None:
        self.logger.warning(message, *args, **kwargs)

    def error(self, message: str, *args, exc_info=False, **kwargs) -> None:
        self.logger.error(message, *args, exc_info=exc_info, **kwargs)

    def exception(self, message: str, *args, **kwargs) -> None:
        self.logger.exception(message, *args, **kwargs)


class _DefaultLogConfig:
    level = "WARNING"
    file_path: Optional[str] = None
    max_file_size = 100
    backup_count = 10


_loggers: Dict[str, StructuredLogger] = {}
_active_config = _DefaultLogConfig()


def get_logger(name: str, log_config=None) -> StructuredLogger:
    """Get or create a logger instance.

    Args:
        name: Logger name
        log_config: Optional LogConfig; the active configuration is used if omitted

    Returns:
        StructuredLogger instance (one per name)
    """
    if name not in _loggers:
        _loggers[name] = StructuredLogger(name, log_config or _active_config)
    return _loggers[name]


def configure_logging(log_config) -> None:
    """Apply a LogConfig to every logger created so far and to later ones.

    Args:
        log_config: LogConfig instance, typically from ConfigManager.load()
    """
    global _active_config
    _active_config = log_config
    for name in list(_loggers):
        _loggers[name] = StructuredLogger(name, log_config)
