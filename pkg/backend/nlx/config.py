"""
Configuration for the nonlinear expectation engine
"""

from pydantic_settings import BaseSettings

# Import shared global settings
import global_config


class Settings(BaseSettings):
    """Engine settings loaded from environment variables

    Defaults are read from `global_config.global_settings` so a single
    `.env` file can configure every module at once.
    """

    # Resources (default to global settings)
    NLX_THREADS: int = global_config.global_settings.NLX_THREADS
    NLX_MAX_TREE_EXPONENT: int = global_config.global_settings.NLX_MAX_TREE_EXPONENT
    SWEEP_CACHE_SIZE: int = 256

    # Tolerances
    EXACT_TOL: float = global_config.global_settings.EXACT_TOL
    CHAIN_TOL: float = global_config.global_settings.CHAIN_TOL
    FIXED_POINT_TOL: float = global_config.global_settings.FIXED_POINT_TOL
    ORACLE_TOL: float = global_config.global_settings.ORACLE_TOL
    PICARD_TOL: float = global_config.global_settings.PICARD_TOL
    IMPLICIT_MAX_ITER: int = 500

    # Generator validation sampling
    VALIDATION_SEED: int = global_config.global_settings.VALIDATION_SEED
    VALIDATION_SAMPLES: int = global_config.global_settings.VALIDATION_SAMPLES
    MODULUS_TEST_GRID: list[float] = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 4.0, 8.0]

    # Reports
    MAX_WITNESSES: int = 20

    # Penalization level cap, n * dt <= LEVEL_CAP_NDT
    LEVEL_CAP_NDT: float = 1e6

    # Logging
    LOG_LEVEL: str = global_config.global_settings.LOG_LEVEL
    LOG_FORMAT: str = global_config.global_settings.LOG_FORMAT

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"


# Global settings instance
settings = Settings()
