"""
Global Configuration Module

Provides shared numerical settings for every engine module and the CLI.
Tolerances, the tree budget, thread count and logging defaults are
declared once here and can be overridden from the environment or a
`.env` file.

Usage:
    from global_config import global_settings
"""

from pydantic_settings import BaseSettings


class GlobalSettings(BaseSettings):
    """
    Global engine settings shared across all modules.

    These provide defaults that `nlx.config.Settings` picks up and that a
    single `.env` file can override for a whole experiment session.
    """

    # Resources
    NLX_THREADS: int = 1
    NLX_MAX_TREE_EXPONENT: int = 22  # N * d, i.e. at most ~4M leaves for d=1

    # Tolerances
    EXACT_TOL: float = 1e-12
    CHAIN_TOL: float = 1e-10
    FIXED_POINT_TOL: float = 1e-13
    ORACLE_TOL: float = 1e-14
    PICARD_TOL: float = 1e-12

    # Sampling for generator validation
    VALIDATION_SEED: int = 20240607
    VALIDATION_SAMPLES: int = 512

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "console"  # "console" or "json"

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"  # Ignore extra fields from .env


# Global instance - imported by nlx.config and the CLI
global_settings = GlobalSettings()
