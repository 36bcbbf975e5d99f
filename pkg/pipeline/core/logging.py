"""
Structured logging configuration for the pipeline
"""

import logging
import sys
from typing import Optional

import structlog
from structlog.stdlib import LoggerFactory


def configure_logging(level: str = "INFO", renderer: str = "console") -> None:
    """Configure structured logging for the application"""

    final_renderer = (
        structlog.processors.JSONRenderer()
        if renderer == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    # Configure structlog
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            final_renderer
        ],
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    # stdout carries command results, logs go to stderr
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level.upper(), logging.INFO),
        force=True,
    )


def get_logger(name: str) -> structlog.BoundLogger:
    """Get a structured logger instance"""
    return structlog.get_logger(name)


class StageLogger:
    """Logger for CLI pipeline stages"""

    def __init__(self):
        self.logger = get_logger("pipeline.stage")

    def log_start(self, stage: str, out_dir: str, **kwargs) -> None:
        """Log a stage starting"""
        self.logger.info(
            "Stage started",
            stage=stage,
            out_dir=out_dir,
            **kwargs
        )

    def log_finish(self, stage: str, out_dir: str, duration_s: float, **kwargs) -> None:
        """Log a stage finishing"""
        self.logger.info(
            "Stage finished",
            stage=stage,
            out_dir=out_dir,
            duration_s=round(duration_s, 3),
            **kwargs
        )

    def log_error(self, stage: str, error: str, exit_code: int, **kwargs) -> None:
        """Log a stage failure"""
        self.logger.error(
            "Stage failed",
            stage=stage,
            error=error,
            exit_code=exit_code,
            **kwargs
        )


class ArtifactLogger:
    """Logger for artifact file operations"""

    def __init__(self):
        self.logger = get_logger("pipeline.artifact")

    def log_operation(self, operation: str, path: str, **kwargs) -> None:
        """Log artifact read or write"""
        self.logger.info(
            "Artifact operation",
            operation=operation,
            path=path,
            **kwargs
        )

    def log_error(self, operation: str, path: str, error: str, **kwargs) -> None:
        """Log artifact error"""
        self.logger.error(
            "Artifact error",
            operation=operation,
            path=path,
            error=error,
            **kwargs
        )


class ComputeLogger:
    """Logger for numeric operations"""

    def __init__(self, name: Optional[str] = None):
        self.logger = get_logger(name or "pipeline.compute")

    def log_operation(self, module: str, operation: str, **kwargs) -> None:
        """Log numeric operation"""
        self.logger.info(
            "Compute operation",
            module=module,
            operation=operation,
            **kwargs
        )

    def log_debug(self, module: str, operation: str, **kwargs) -> None:
        """Log fine-grained numeric progress"""
        self.logger.debug(
            "Compute progress",
            module=module,
            operation=operation,
            **kwargs
        )

    def log_warning(self, module: str, operation: str, warning: str, **kwargs) -> None:
        """Log a numeric fallback or degraded result"""
        self.logger.warning(
            "Compute warning",
            module=module,
            operation=operation,
            warning=warning,
            **kwargs
        )

    def log_error(self, module: str, operation: str, error: str, **kwargs) -> None:
        """Log numeric failure"""
        self.logger.error(
            "Compute error",
            module=module,
            operation=operation,
            error=error,
            **kwargs
        )
