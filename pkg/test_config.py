"""
Tests for environment based configuration.
"""

import pytest

from config.settings import Config

ENV_VARS = ["MAF_LOG_LEVEL", "MAF_WORKERS", "MAF_OUTPUT_DIR", "MAF_REPLICATIONS", "MAF_BASE_SEED",
            "MAF_CONTENT_BYTES"]


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    config = Config(setup_logging=False)
    assert config.LOG_LEVEL == "INFO"
    assert config.WORKERS == 1
    assert config.OUTPUT_DIR == "results"
    assert config.REPLICATIONS == 20
    assert config.BASE_SEED == 1
    assert config.CONTENT_BYTES == 20_000_000
    assert not config.is_parallel


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("MAF_WORKERS", "4")
    monkeypatch.setenv("MAF_REPLICATIONS", "3")
    monkeypatch.setenv("MAF_BASE_SEED", "-5")
    monkeypatch.setenv("MAF_LOG_LEVEL", "debug")
    monkeypatch.setenv("MAF_OUTPUT_DIR", "out/run1")
    config = Config(setup_logging=False)
    assert config.WORKERS == 4 and config.is_parallel
    assert config.REPLICATIONS == 3
    assert config.BASE_SEED == -5
    assert config.LOG_LEVEL == "DEBUG"
    assert config.OUTPUT_DIR == "out/run1"


@pytest.mark.parametrize("name,value", [
    ("MAF_WORKERS", "0"),
    ("MAF_REPLICATIONS", "many"),
    ("MAF_CONTENT_BYTES", "-1"),
    ("MAF_BASE_SEED", "1.5"),
])
def test_invalid_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError, match=name):
        Config(setup_logging=False)


def test_unknown_log_level_falls_back(monkeypatch):
    monkeypatch.setenv("MAF_LOG_LEVEL", "chatty")
    assert Config(setup_logging=False).LOG_LEVEL == "INFO"
