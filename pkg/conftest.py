#!/usr/bin/env python3
import sys
import logging
from pathlib import Path

import numpy as np
import pytest

# Add the project directory to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import load_settings
from src.encoder.params import ConventionalParams, VbtParams
from src.signals.generators import make_chirp, make_constant, make_sos

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

CHIRP_VBT = VbtParams(alpha=0.5, beta=5600.0, shift=4.2, c=1.0)
CHIRP_CONVENTIONAL = ConventionalParams(bias=1.3, threshold=0.0015)
SOS_VBT = VbtParams(alpha=0.45, beta=2400.0, shift=3.0, c=1.0)
SOS_CONVENTIONAL = ConventionalParams(bias=1.2, threshold=0.0015)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale runs (deselect with -m 'not slow')")


@pytest.fixture(scope="session")
def chirp():
    return make_chirp()


@pytest.fixture(scope="session")
def sos():
    return make_sos(7)


@pytest.fixture(scope="session")
def zero_signal():
    return make_constant(0.0)


@pytest.fixture(scope="session")
def settings():
    return load_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
