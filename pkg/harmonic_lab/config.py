"""
Configuration settings for the harmonic ball laboratory
"""

import sys
from typing import Optional

from loguru import logger
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide defaults; every value can be overridden per scenario"""

    model_config = SettingsConfigDict(
        env_prefix="HLAB_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging Configuration
    log_level: str = "INFO"

    # Output Configuration
    output_dir: str = "out"

    # Relaxation solver defaults
    relaxation: float = 1.9
    solver_tolerance: float = 1e-10
    max_sweeps: int = 200_000
    check_every: int = 10

    # Sandpile oracle defaults
    sandpile_tolerance: float = 1e-6
    sandpile_max_rounds: int = 2_000_000

    # Verification defaults
    relative_tolerance: float = 0.01
    schwarz_constant: float = 5.0
    quadrature_tolerance: float = 0.02


# Create settings instance
settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Install a single stderr sink at the configured level"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.log_level).upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
        "<cyan>{name}</cyan> - <level>{message}</level>",
    )
