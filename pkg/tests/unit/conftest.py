import numpy as np
import pytest

from blinky_bss.domain import model
from tests import factories


@pytest.fixture
def joint_state() -> model.JointState:
    return factories.generate_joint_state()


@pytest.fixture
def white_references() -> list[model.TimeSignal]:
    rng = np.random.default_rng(42)
    return [model.TimeSignal(samples=rng.standard_normal(16000)) for _ in range(2)]
