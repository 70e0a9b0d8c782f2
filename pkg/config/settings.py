"""
Application configuration and settings.

This module handles environment variable loading, configuration validation,
and provides a centralized configuration object for the simulator.
"""

import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Config:
    """Application configuration class."""

    def __init__(self, setup_logging: bool = True):
        """Initialize configuration with environment variables."""
        # Logging
        self.LOG_LEVEL = (os.getenv('MAF_LOG_LEVEL') or 'INFO').upper()

        # Harness defaults
        self.WORKERS = os.getenv('MAF_WORKERS', '1')
        self.OUTPUT_DIR = os.getenv('MAF_OUTPUT_DIR') or 'results'
        self.REPLICATIONS = os.getenv('MAF_REPLICATIONS', '20')
        self.BASE_SEED = os.getenv('MAF_BASE_SEED', '1')

        # Content size, decimal megabytes (20 MB)
        self.CONTENT_BYTES = os.getenv('MAF_CONTENT_BYTES', '20000000')

        # Validate configuration
        self._validate_config()

        if setup_logging:
            self._setup_logging()

    def _validate_config(self):
        """Validate and convert numeric settings."""
        positive_vars = ['WORKERS', 'REPLICATIONS', 'CONTENT_BYTES']

        invalid_vars = []
        for var in positive_vars:
            try:
                value = int(getattr(self, var))
            except (TypeError, ValueError):
                invalid_vars.append(var)
                continue
            if value < 1:
                invalid_vars.append(var)
            setattr(self, var, value)

        try:
            self.BASE_SEED = int(self.BASE_SEED)
        except (TypeError, ValueError):
            invalid_vars.append('BASE_SEED')

        if invalid_vars:
            names = ', '.join(f"MAF_{v}" for v in invalid_vars)
            raise ValueError(f"Invalid environment variables (positive integers expected): {names}")

        if not isinstance(logging.getLevelName(self.LOG_LEVEL), int):
            logging.warning(f"Unknown MAF_LOG_LEVEL {self.LOG_LEVEL}, falling back to INFO")
            self.LOG_LEVEL = 'INFO'

    def _setup_logging(self):
        """Configure application logging."""
        logging.basicConfig(
            format=LOG_FORMAT,
            level=getattr(logging, self.LOG_LEVEL)
        )
        self.logger = logging.getLogger(__name__)

    @property
    def is_parallel(self) -> bool:
        """Check if replications run on a worker pool."""
        return self.WORKERS > 1
