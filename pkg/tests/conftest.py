from __future__ import annotations

import logging

import numpy as np
import pytest

from src.core.config import get_settings
from src.repositories.witness_repository import WitnessRepository


@pytest.fixture(autouse=True)
def _fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    # The CLI binds handlers to captured streams.
    logging.getLogger().handlers.clear()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture()
def witnesses() -> WitnessRepository:
    return WitnessRepository()
