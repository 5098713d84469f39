from __future__ import annotations

import pytest

from roadcheck.config import RunConfig
from roadcheck.synth import SCENARIOS, build_scene


@pytest.fixture(scope="session")
def scenes():
    """All built-in scenarios at the default camera, built once per session."""
    return {name: build_scene(name) for name in SCENARIOS}


@pytest.fixture(scope="session")
def default_config():
    return RunConfig()
