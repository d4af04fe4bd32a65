import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from hadamard_means import (  # noqa: E402
    CircleChordArcSpace,
    EuclideanSpace,
    PoincareDisk,
    RiverPlane,
)


@pytest.fixture(scope="session")
def euclid2():
    return EuclideanSpace(2)


@pytest.fixture(scope="session")
def euclid3():
    return EuclideanSpace(3)


@pytest.fixture(scope="session")
def river():
    return RiverPlane()


@pytest.fixture(scope="session")
def disk():
    return PoincareDisk(0.05)


@pytest.fixture(scope="session")
def circle():
    return CircleChordArcSpace()


@pytest.fixture(scope="session")
def shipped_spaces(euclid2, river, disk):
    return (euclid2, river, disk)
