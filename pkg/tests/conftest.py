import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from amenable_entropy.systems import Bernoulli, MarkovZ, PeriodicZ  # noqa: E402

GOLDEN_P = ((0.9, 0.1), (0.2, 0.8))
H_PI = 0.6365141682948128  # H(2/3, 1/3)
H_RATE = 0.38352279010702806  # (2/3) H(.9,.1) + (1/3) H(.8,.2)


@pytest.fixture
def golden():
    return MarkovZ(GOLDEN_P)


@pytest.fixture
def three_state():
    return MarkovZ(((0.5, 0.3, 0.2), (0.1, 0.6, 0.3), (0.4, 0.1, 0.5)))


@pytest.fixture
def fair_coin():
    return Bernoulli((0.5, 0.5))


@pytest.fixture
def periodic_ab():
    return PeriodicZ("ab")
