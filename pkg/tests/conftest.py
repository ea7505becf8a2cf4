"""Test configuration."""
import json

import pytest

from app.defaults_loader import DefaultsLoader, reset_defaults_loader
from app.domain.models import SetDescriptor
from app.utils.rng import RandomStreams


@pytest.fixture
def streams():
    """Create seeded random streams."""
    return RandomStreams(12345)


@pytest.fixture
def rng(streams):
    """Create a single generator for tests that need one."""
    return streams.stream(99)


@pytest.fixture
def middle_third():
    """Create the middle-third Cantor set on [0, 1]."""
    return SetDescriptor.cantor(0.0, 1.0, branches=2, ratio=1.0 / 3.0)


@pytest.fixture
def fifth_cantor():
    """Create the two-branch Cantor set with ratio 1/5 (dimension below 1/2)."""
    return SetDescriptor.cantor(0.0, 1.0, branches=2, ratio=0.2)


@pytest.fixture
def defaults(tmp_path):
    """Create a defaults loader that only uses built-in values."""
    return DefaultsLoader(str(tmp_path / "missing.yaml"))


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Keep tests away from the developer's environment and shared loader."""
    for key in ("LAB_LOG_LEVEL", "LAB_WORKERS", "LAB_DEFAULTS_FILE"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("LAB_LOG_FILE", str(tmp_path / "logs" / "lab.log"))
    reset_defaults_loader()
    yield
    reset_defaults_loader()


@pytest.fixture
def run_file(tmp_path):
    """Create a factory writing JSON run files."""
    def _write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
