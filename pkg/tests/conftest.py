from pathlib import Path

import numpy as np
import pytest

from kraus_spectra.src.channel import KrausChannel
from kraus_spectra.src.families import (
    example1_kraus,
    example2_kraus,
    two_generator_kraus,
)

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "kraus_spectra" / "fixtures"
EXAMPLE1_FIXTURE = FIXTURE_DIR / "example1_phi_0.7853981633974483.json"
EXAMPLE2_FIXTURE = FIXTURE_DIR / "example2_phi_1.0471975511965976.json"
TWO_GENERATOR_FIXTURE = FIXTURE_DIR / "two_generator_qutrit.json"


@pytest.fixture
def rng():
    """Seeded generator so random cases are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def fixture_dir():
    return FIXTURE_DIR


@pytest.fixture
def example1():
    """Unital qutrit channel with blocks 2 + 1 at phi = pi/4."""
    return KrausChannel.from_kraus(example1_kraus(np.pi / 4))


@pytest.fixture
def example2_raw():
    """The three Hermitian operators at phi = pi/3, not normalized."""
    return example2_kraus(np.pi / 3, normalize=False)


@pytest.fixture
def example2():
    return KrausChannel.from_kraus(example2_kraus(np.pi / 3))


@pytest.fixture
def two_generator():
    return KrausChannel.from_kraus(two_generator_kraus())


@pytest.fixture
def two_generator_scaled():
    return two_generator_kraus(scaled=True)
