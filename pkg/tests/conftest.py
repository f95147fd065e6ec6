import numpy as np
import pytest

from blinky_bss.domain.structs import JointConfig, SceneConfig
from tests.fakes.storages import FakeAudioStorage


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def audio_storage() -> FakeAudioStorage:
    return FakeAudioStorage()


@pytest.fixture
def small_scene_config() -> SceneConfig:
    """Short, lightly reverberant scene that mixes in well under a second."""
    return SceneConfig(
        n_sources=2,
        n_mics=2,
        n_blinkies=4,
        n_interferers=2,
        rir_length=256,
        rir_decay_ms=20.0,
        seed=3,
        duration_s=2.0,
    )


@pytest.fixture
def fast_joint_config() -> JointConfig:
    return JointConfig(n_iter=5, nmf_sub_iter=3, seed=0)
