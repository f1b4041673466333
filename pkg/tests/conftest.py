"""Pytest configuration."""

import pytest

from complexray.config import RunConfig
from complexray.options import CONFIG, OPTIONS
from complexray.transforms import Phantom


@pytest.fixture(autouse=True)
def wipe_options():
    """Reset global OPTIONS and CONFIG dictionaries before every test."""
    OPTIONS.clear()
    CONFIG.clear()


@pytest.fixture
def small_config():
    """Coarse settings that keep a full pipeline run within seconds."""
    return RunConfig(n=32, n_theta=64, n_s=129, n_curves=64, hness_samples=8)


@pytest.fixture
def wide_phantom():
    """Two wide bumps, well resolved by the coarse settings."""
    return Phantom([(0.2 + 0.1j, 1.0, 0.3), (-0.25 - 0.2j, 0.6, 0.35)], support_radius=0.9, name='wide')
