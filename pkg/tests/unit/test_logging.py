import logging

import pytest

from mongeforge.utils.logging import default_level, get_logger, log_exception, set_level


@pytest.fixture
def package_level():
    """Restore the package log level after a test."""
    level = get_logger().level
    yield
    set_level(level)


def test_module_loggers_share_package_handler():
    """Test that module loggers are children without handlers of their own."""
    package = get_logger()
    module = get_logger("mongeforge.core.scene")
    assert package.name == "mongeforge"
    assert len(package.handlers) == 1
    assert not package.propagate
    assert module.parent is package
    assert module.handlers == []


def test_default_level(monkeypatch):
    """Test the level read from the environment."""
    monkeypatch.delenv("MONGEFORGE_LOG_LEVEL", raising=False)
    assert default_level() == logging.INFO
    monkeypatch.setenv("MONGEFORGE_LOG_LEVEL", "debug")
    assert default_level() == logging.DEBUG
    monkeypatch.setenv("MONGEFORGE_LOG_LEVEL", "chatty")
    assert default_level() == logging.INFO


def test_set_level(package_level):
    """Test that set_level reaches the rich handler."""
    set_level(logging.WARNING)
    package = get_logger()
    assert package.level == logging.WARNING
    assert all(h.level == logging.WARNING for h in package.handlers)
    assert not get_logger("mongeforge.cli.main").isEnabledFor(logging.INFO)


def test_log_exception(caplog):
    """Test logging an exception with and without exiting."""
    logger = logging.getLogger("tests.log_exception")
    with caplog.at_level(logging.ERROR, logger="tests.log_exception"):
        log_exception(logger, ValueError("bad bbox"), "Sampling failed")
    assert "Sampling failed: ValueError: bad bbox" in caplog.text

    with pytest.raises(SystemExit) as exc:
        log_exception(logger, ValueError("bad bbox"), exit_code=3)
    assert exc.value.code == 3
