import pathlib
from typing import Self, final, override

import numpy as np
import soundfile as sf
from structlog import get_logger

from blinky_bss import config
from blinky_bss.domain import exceptions, model, ports
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()


@final
class SoundfileAudioStorage(ports.AudioStorage):
    """WAV files read as float64 in [-1, 1); no resampling is ever performed."""

    def __init__(self, sample_rate: int, subtype: str = "FLOAT"):
        self.sample_rate = sample_rate
        self.subtype = subtype

    @override
    @classmethod
    def from_config(cls, app_config: config.AppConfig) -> Self:
        return cls(sample_rate=app_config.sample_rate)

    @override
    def read(self, file_path: pathlib.Path) -> model.TimeSignal:
        if not file_path.is_file():
            raise exceptions.AudioReadError(f"Could not find audio file {file_path}")

        try:
            samples, sample_rate = sf.read(file_path, dtype="float64", always_2d=True)
        except (OSError, sf.LibsndfileError) as e:
            raise exceptions.AudioReadError(
                f"Failed to read audio file {file_path}: {e}"
            ) from e

        if sample_rate != self.sample_rate:
            raise exceptions.SampleRateMismatchError(
                f"sample rate mismatch: {file_path} is {sample_rate} Hz, expected {self.sample_rate} Hz"
            )
        logger.debug(
            "Read audio", path=str(file_path), shape=list(samples.shape)
        )
        try:
            return model.TimeSignal(samples=np.asarray(samples), sample_rate=sample_rate)
        except exceptions.SignalError as e:
            raise exceptions.AudioReadError(f"Invalid audio in {file_path}: {e}") from e

    @override
    def write(self, signal: model.TimeSignal, file_path: pathlib.Path) -> None:
        if signal.sample_rate != self.sample_rate:
            raise exceptions.SampleRateMismatchError(
                f"sample rate mismatch: cannot write {signal.sample_rate} Hz audio to {file_path} at {self.sample_rate} Hz"
            )
        try:
            file_path.parent.mkdir(parents=True, exist_ok=True)
            sf.write(file_path, signal.samples, signal.sample_rate, subtype=self.subtype)
        except (OSError, sf.LibsndfileError) as e:
            raise exceptions.AudioWriteError(
                f"Failed to write audio file {file_path}: {e}"
            ) from e
        logger.debug("Wrote audio", path=str(file_path), shape=list(signal.samples.shape))
