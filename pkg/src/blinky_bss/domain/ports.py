import abc
import pathlib
from typing import Self

from blinky_bss import config
from blinky_bss.domain import model


class Separator(abc.ABC):
    """Port for a determined separation algorithm working on a spectrogram."""

    algorithm: model.Algorithm

    @abc.abstractmethod
    def separate(
        self,
        spec: model.Spectrogram,
        n_sources: int,
        blinky_power: model.FloatArray | None = None,
    ) -> model.SeparationResult:
        """
        Demixes `spec` and reports which `n_sources` channels are the targets.
        Implementations that need blinky measurements raise when they are missing.
        """
        raise NotImplementedError


class AudioStorage(abc.ABC):
    sample_rate: int

    @classmethod
    @abc.abstractmethod
    def from_config(cls, app_config: config.AppConfig) -> Self:
        raise NotImplementedError

    @abc.abstractmethod
    def read(self, file_path: pathlib.Path) -> model.TimeSignal:
        raise NotImplementedError

    @abc.abstractmethod
    def write(self, signal: model.TimeSignal, file_path: pathlib.Path) -> None:
        raise NotImplementedError

    def read_many(self, file_paths: list[pathlib.Path]) -> model.TimeSignal:
        """Reads several files and stacks their channels in order."""
        signals = [self.read(path) for path in file_paths]
        channels = [channel for signal in signals for channel in signal.channels()]
        return model.TimeSignal.from_channels(channels, sample_rate=self.sample_rate)
