from pathlib import Path

import numpy as np
import pytest
import soundfile as sf

from blinky_bss.adapters.audio.soundfile_storage import SoundfileAudioStorage
from blinky_bss.config import AppConfig
from blinky_bss.domain import exceptions, model


class TestSoundfileAudioStorage:
    @pytest.fixture
    def storage(self) -> SoundfileAudioStorage:
        return SoundfileAudioStorage(sample_rate=16000)

    @pytest.fixture
    def signal(self) -> model.TimeSignal:
        rng = np.random.default_rng(0)
        return model.TimeSignal(samples=0.5 * rng.uniform(-1.0, 1.0, (1600, 2)))

    def test_from_config_uses_configured_rate(self):
        storage = SoundfileAudioStorage.from_config(AppConfig(sample_rate=8000))

        assert storage.sample_rate == 8000

    def test_float_round_trip(
        self, storage: SoundfileAudioStorage, signal: model.TimeSignal, tmp_path: Path
    ):
        file_path = tmp_path / "nested" / "mics.wav"

        storage.write(signal, file_path)
        restored = storage.read(file_path)

        assert restored.sample_rate == 16000
        np.testing.assert_array_equal(
            restored.samples, signal.samples.astype(np.float32).astype(np.float64)
        )

    def test_pcm_files_are_scaled_to_unit_range(self, signal: model.TimeSignal, tmp_path: Path):
        file_path = tmp_path / "pcm.wav"
        SoundfileAudioStorage(16000, subtype="PCM_16").write(signal, file_path)

        restored = SoundfileAudioStorage(16000).read(file_path)

        assert np.all(restored.samples >= -1.0)
        assert np.all(restored.samples < 1.0)
        np.testing.assert_allclose(restored.samples, signal.samples, atol=2.0 / 2**15)

    def test_other_sample_rate_raises(self, storage: SoundfileAudioStorage, tmp_path: Path):
        file_path = tmp_path / "cd.wav"
        sf.write(file_path, np.zeros(441), 44100)

        with pytest.raises(exceptions.SampleRateMismatchError, match="sample rate mismatch"):
            storage.read(file_path)

    def test_writing_other_rate_raises(self, storage: SoundfileAudioStorage, tmp_path: Path):
        signal = model.TimeSignal(samples=np.zeros(80), sample_rate=8000)

        with pytest.raises(exceptions.SampleRateMismatchError):
            storage.write(signal, tmp_path / "x.wav")

    def test_missing_file_raises(self, storage: SoundfileAudioStorage, tmp_path: Path):
        with pytest.raises(exceptions.AudioReadError, match="missing.wav"):
            storage.read(tmp_path / "missing.wav")

    def test_non_audio_file_raises(self, storage: SoundfileAudioStorage, tmp_path: Path):
        file_path = tmp_path / "notes.wav"
        file_path.write_text("not audio")

        with pytest.raises(exceptions.AudioReadError, match="notes.wav"):
            storage.read(file_path)

    def test_read_many_stacks_channels(
        self, storage: SoundfileAudioStorage, signal: model.TimeSignal, tmp_path: Path
    ):
        storage.write(signal, tmp_path / "a.wav")
        storage.write(signal.channel(0), tmp_path / "b.wav")

        stacked = storage.read_many([tmp_path / "a.wav", tmp_path / "b.wav"])

        assert stacked.n_channels == 3
        np.testing.assert_array_equal(stacked.samples[:, 2], stacked.samples[:, 0])
