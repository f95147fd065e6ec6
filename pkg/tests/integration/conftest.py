import pytest

from blinky_bss.domain.model import TimeSignal
from tests import factories


@pytest.fixture(scope="module")
def alternating_pair() -> list[TimeSignal]:
    """Two 4 s Gaussian sources active in alternating 128 ms blocks."""
    return factories.alternating_sources(4 * 16000, 2048, floor=1e-3, seed=0)
