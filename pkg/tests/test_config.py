#!/usr/bin/env python3
"""
Tests for run-config files and environment defaults
"""

import logging
import os
import sys

import pytest

# Add parent directory to path to import modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import Config, ConfigError, load_config_file, parse_bool  # noqa: E402


def test_load_config_file(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text("problem=example2\ndt=0.001\nadaptive.mu=1.0005\nadaptive.move_mode=right\n")
    values = load_config_file(path)
    assert values == {
        'problem': 'example2',
        'dt': '0.001',
        'adaptive.mu': '1.0005',
        'adaptive.move_mode': 'right',
    }


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text("adaptive.speed=3\n")
    with pytest.raises(ConfigError, match='adaptive.speed'):
        load_config_file(path)


def test_missing_file_is_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / 'absent.env')


@pytest.mark.parametrize('text, expected', [
    ('true', True), ('Yes', True), ('1', True), (' on ', True),
    ('false', False), ('NO', False), ('0', False), ('off', False),
    (True, True), (False, False),
])
def test_parse_bool(text, expected):
    assert parse_bool(text) is expected


def test_parse_bool_rejects_other_text():
    with pytest.raises(ConfigError):
        parse_bool('maybe')


def test_config_error_is_a_value_error():
    assert issubclass(ConfigError, ValueError)


def test_logging_config(monkeypatch):
    monkeypatch.setattr(Config, 'LOG_LEVEL', 'DEBUG')
    monkeypatch.setattr(Config, 'ENVIRONMENT', 'production')
    assert Config.get_logging_config()['level'] == logging.INFO
    monkeypatch.setattr(Config, 'ENVIRONMENT', 'development')
    settings = Config.get_logging_config()
    assert settings['level'] == logging.DEBUG
    assert 'asctime' in settings['format']
    assert Config.is_development() and not Config.is_production()


def test_default_gauss_legendre_order():
    assert Config.DEFAULT_GL_ORDER >= 1


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
