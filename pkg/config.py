#!/usr/bin/env python3
"""
Configuration Factory - Centralized configuration management
"""

import os
from typing import Optional


def _env_float(name: str, default: str) -> float:
    """Read a float environment variable, failing loudly on garbage."""
    raw = os.getenv(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got '{raw}'")


class ConfigFactory:
    """
    Singleton configuration factory.

    Provides centralized access to all environment variables.
    """
    _instance: Optional['ConfigFactory'] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        # Always reload configuration from environment variables when
        # available, falling back to the documented defaults.

        # Output configuration
        self.output_root = os.getenv("RANKOOD_OUTPUT_ROOT", "rankood_runs")

        # Logging configuration
        self.log_level = os.getenv("RANKOOD_LOG_LEVEL", "INFO").upper()
        self.log_format = os.getenv("RANKOOD_LOG_FORMAT", "console").lower()
        if self.log_format not in ("json", "console"):
            raise ValueError(
                "RANKOOD_LOG_FORMAT must be 'json' or 'console', "
                f"got '{self.log_format}'"
            )

        # Scoring defaults
        self.default_gamma = _env_float("RANKOOD_DEFAULT_GAMMA", "1.5")
        self.default_percentile = _env_float(
            "RANKOOD_DEFAULT_PERCENTILE", "0.95"
        )
        self.default_tpr = _env_float("RANKOOD_DEFAULT_TPR", "0.95")

        # Worker configuration
        self.num_workers = int(os.getenv("RANKOOD_NUM_WORKERS", "1"))
        if self.num_workers < 1:
            raise ValueError("RANKOOD_NUM_WORKERS must be >= 1")

    @classmethod
    def reset(cls):
        """Reset the singleton instance for testing"""
        cls._instance = None

    def reload(self):
        """Reload configuration from environment variables"""
        self.__init__()

    def get_output_config(self) -> dict:
        """Get output configuration as dictionary"""
        return {
            'output_root': self.output_root,
        }

    def get_logging_config(self) -> dict:
        """Get logging configuration as dictionary"""
        return {
            'log_level': self.log_level,
            'log_format': self.log_format,
        }

    def get_scoring_config(self) -> dict:
        """Get scoring defaults as dictionary"""
        return {
            'gamma': self.default_gamma,
            'percentile': self.default_percentile,
            'tpr': self.default_tpr,
        }

    def get_worker_config(self) -> dict:
        """Get worker configuration as dictionary"""
        return {
            'num_workers': self.num_workers,
        }

    def get_all_config(self) -> dict:
        """Get all configuration as dictionary"""
        return {
            **self.get_output_config(),
            **self.get_logging_config(),
            **self.get_scoring_config(),
            **self.get_worker_config(),
        }

    def __str__(self):
        """String representation for debugging"""
        return f"ConfigFactory(output_root={self.output_root})"


# Global configuration instance
config = ConfigFactory()
