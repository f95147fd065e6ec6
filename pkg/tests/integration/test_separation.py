from pathlib import Path

import numpy as np
import pytest

from blinky_bss.adapters import blinky
from blinky_bss.adapters.audio.soundfile_storage import SoundfileAudioStorage
from blinky_bss.domain import model
from blinky_bss.domain.structs import JointConfig
from blinky_bss.dsp import metrics, scene, stft
from blinky_bss.service_layer import services

FRAME_SIZE = 512


def stacked(signals: list[model.TimeSignal]) -> model.TimeSignal:
    return model.TimeSignal.from_channels([signal.samples[:, 0] for signal in signals])


@pytest.mark.parametrize("algorithm", list(model.Algorithm))
def test_unmixed_sources_stay_separated(
    alternating_pair: list[model.TimeSignal], algorithm: model.Algorithm
):
    mics = stacked(alternating_pair)
    spec = stft.analyze(mics, FRAME_SIZE)
    U = scene.blinky_signals(mics, FRAME_SIZE)
    separator = services.make_separator(algorithm, JointConfig(n_iter=10, nmf_sub_iter=5))

    result = services.separate(spec, separator, 2, U)
    estimates = services.reconstruct(result, reference_channel=None)
    report = metrics.bss_eval(alternating_pair, estimates)

    assert min(report.sir) >= 40.0
    assert result.max_normalization_error <= 1e-8


def test_separate_files_recovers_images_at_the_reference_mic(
    alternating_pair: list[model.TimeSignal], tmp_path: Path
):
    storage = SoundfileAudioStorage(sample_rate=16000)
    sources = stacked(alternating_pair)
    mixing = np.array([[1.0, 0.5], [0.4, 1.0]])
    storage.write(model.TimeSignal(samples=sources.samples @ mixing.T), tmp_path / "mics.wav")
    blinky.write_blinky_csv(scene.blinky_signals(sources, FRAME_SIZE), tmp_path / "blinky.csv")

    report = services.separate_files(
        [tmp_path / "mics.wav"],
        [tmp_path / "blinky.csv"],
        model.Algorithm.BLINKIVA,
        2,
        JointConfig(n_iter=30, nmf_sub_iter=5),
        storage,
        FRAME_SIZE,
        tmp_path / "out",
    )

    estimates = [storage.read(Path(path)) for path in report.outputs]
    evaluation = metrics.bss_eval(alternating_pair, estimates)
    assert min(evaluation.sir) >= 30.0
    for j, k in enumerate(evaluation.permutation):
        image = mixing[0, j] * alternating_pair[j].samples[:, 0]
        error = estimates[k].samples[:, 0] - image
        assert float(np.sum(error**2)) <= 1e-2 * float(np.sum(image**2))
