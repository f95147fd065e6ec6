from pathlib import Path

import numpy as np
import pytest

from blinky_bss.adapters import blinky
from blinky_bss.domain import exceptions, model
from blinky_bss.dsp.scene import blinky_signals
from tests.fakes.storages import FakeAudioStorage


class TestBlinkyCsv:
    def test_round_trip_is_exact(self, tmp_path: Path, rng: np.random.Generator):
        U = rng.uniform(0.0, 1e3, (4, 25))
        file_path = tmp_path / "out" / "blinky.csv"

        blinky.write_blinky_csv(U, file_path)

        np.testing.assert_array_equal(blinky.read_blinky_csv(file_path), U)

    def test_has_no_header(self, tmp_path: Path):
        file_path = tmp_path / "blinky.csv"

        blinky.write_blinky_csv(np.array([[1.0, 2.0], [3.0, 4.0]]), file_path)

        assert file_path.read_text().splitlines() == ["1,2", "3,4"]

    def test_negative_entry_raises(self, tmp_path: Path):
        file_path = tmp_path / "blinky.csv"
        file_path.write_text("1.0,2.0\n-3.0,4.0\n")

        with pytest.raises(exceptions.SignalError, match="negative"):
            blinky.read_blinky_csv(file_path)

    def test_non_numeric_entry_raises(self, tmp_path: Path):
        file_path = tmp_path / "blinky.csv"
        file_path.write_text("1.0,abc\n")

        with pytest.raises(exceptions.AudioReadError):
            blinky.read_blinky_csv(file_path)

    def test_empty_file_raises(self, tmp_path: Path):
        file_path = tmp_path / "blinky.csv"
        file_path.write_text("")

        with pytest.raises(exceptions.AudioReadError):
            blinky.read_blinky_csv(file_path)

    def test_missing_file_raises(self, tmp_path: Path):
        with pytest.raises(exceptions.AudioReadError, match="Could not find"):
            blinky.read_blinky_csv(tmp_path / "missing.csv")


class TestLoadBlinkyPower:
    def test_single_csv(self, tmp_path: Path, audio_storage: FakeAudioStorage):
        U = np.arange(6.0).reshape(2, 3)
        file_path = tmp_path / "blinky.csv"
        blinky.write_blinky_csv(U, file_path)

        loaded = blinky.load_blinky_power([file_path], audio_storage, 512)

        np.testing.assert_array_equal(loaded, U)

    def test_wav_set_is_reduced_to_frame_power(
        self, audio_storage: FakeAudioStorage, rng: np.random.Generator
    ):
        first = model.TimeSignal(samples=rng.standard_normal(4096))
        second = model.TimeSignal(samples=rng.standard_normal(4096))
        audio_storage.files = {"b0.wav": first, "b1.wav": second}

        U = blinky.load_blinky_power([Path("b0.wav"), Path("b1.wav")], audio_storage, 512)

        expected = blinky_signals(
            model.TimeSignal.from_channels([first.samples[:, 0], second.samples[:, 0]]), 512
        )
        np.testing.assert_array_equal(U, expected)

    def test_csv_mixed_with_wavs_raises(self, audio_storage: FakeAudioStorage):
        with pytest.raises(exceptions.ConfigurationError, match="not both"):
            blinky.load_blinky_power(
                [Path("blinky.csv"), Path("b0.wav")], audio_storage, 512
            )

    def test_no_files_raises(self, audio_storage: FakeAudioStorage):
        with pytest.raises(exceptions.MissingBlinkyDataError):
            blinky.load_blinky_power([], audio_storage, 512)

    def test_missing_wav_raises(self, audio_storage: FakeAudioStorage):
        with pytest.raises(exceptions.AudioReadError):
            blinky.load_blinky_power([Path("nowhere.wav")], audio_storage, 512)
