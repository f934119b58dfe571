#!/usr/bin/env python3
"""
Configuration management
Environment-level defaults (development, staging, production) and flat
key=value run-config files for the solver CLI.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict

from dotenv import dotenv_values, load_dotenv

# Load environment-specific .env file
env = os.getenv('ENVIRONMENT', 'development')
env_file = f'.env.{env}'

if os.path.exists(env_file):
    load_dotenv(env_file)
else:
    load_dotenv('.env')  # Fallback to default .env


class ConfigError(ValueError):
    """Invalid run configuration."""


class Config:
    """Application configuration"""

    ENVIRONMENT = env

    # Output locations
    OUTPUT_DIR = os.getenv('HERMITE_OUTPUT_DIR', './runs')
    LOG_DIR = os.getenv('HERMITE_LOG_DIR', './logs')
    LOG_LEVEL = os.getenv('HERMITE_LOG_LEVEL', 'INFO').upper()

    # Sweeps fan out over processes; 1 runs serially
    SWEEP_WORKERS = int(os.getenv('HERMITE_SWEEP_WORKERS', str(os.cpu_count() or 1)))

    # Gauss-Legendre nodes for the source integral of each step
    DEFAULT_GL_ORDER = int(os.getenv('HERMITE_GL_ORDER', '5'))

    @classmethod
    def get_logging_config(cls) -> Dict[str, Any]:
        """Get logging configuration based on environment"""
        level = cls.LOG_LEVEL
        if cls.is_production() and level == 'DEBUG':
            level = 'INFO'
        return {
            'level': getattr(logging, level, logging.INFO),
            'format': '%(asctime)s - %(levelname)s - %(message)s',
            'log_dir': Path(cls.LOG_DIR),
        }

    @classmethod
    def is_production(cls) -> bool:
        """Check if running in production"""
        return cls.ENVIRONMENT == 'production'

    @classmethod
    def is_development(cls) -> bool:
        """Check if running in development"""
        return cls.ENVIRONMENT == 'development'


# Dotted keys accepted in run-config files
RUN_CONFIG_KEYS = {
    'problem',
    'dt',
    't_final',
    'gl_order',
    'output_path',
    'log_every',
    'initial_basis.beta',
    'initial_basis.x0',
    'initial_basis.n',
    'adaptive.q',
    'adaptive.nu',
    'adaptive.delta',
    'adaptive.mu',
    'adaptive.eta',
    'adaptive.eta0',
    'adaptive.gamma',
    'adaptive.d_max',
    'adaptive.n_max',
    'adaptive.beta_min',
    'adaptive.beta_max',
    'adaptive.enable_move_right',
    'adaptive.enable_move_left',
    'adaptive.enable_scale',
    'adaptive.enable_order',
    'adaptive.move_mode',
    'adaptive.transfer',
}


def load_config_file(path) -> Dict[str, str]:
    """Read a flat key=value run-config file into a dict of dotted keys."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = {key: value for key, value in dotenv_values(path).items() if value is not None}
    unknown = sorted(set(values) - RUN_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return values


def parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ConfigError(f"not a boolean: {value!r}")
