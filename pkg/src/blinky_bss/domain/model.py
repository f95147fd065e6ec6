from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Self

import numpy as np
import numpy.typing as npt

from blinky_bss.domain import exceptions

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]

DEFAULT_SAMPLE_RATE = 16000
DB_CAP = 100.0


"""
--- Signals ---
"""


@dataclass(frozen=True)
class TimeSignal:
    """Real multichannel signal stored as (n_samples, n_channels)."""

    samples: FloatArray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, np.newaxis]
        if samples.ndim != 2:
            raise exceptions.SignalError(
                f"Signal must be 1-D or 2-D (n_samples, n_channels), got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise exceptions.SignalError("Signal contains non-finite samples")
        if self.sample_rate <= 0:
            raise exceptions.SignalError(
                f"Sample rate must be positive, got {self.sample_rate}"
            )
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_channels(
        cls, channels: Sequence[FloatArray], sample_rate: int = DEFAULT_SAMPLE_RATE
    ) -> Self:
        if not channels:
            raise exceptions.SignalError("At least one channel is required")
        lengths = {len(channel) for channel in channels}
        if len(lengths) != 1:
            raise exceptions.SignalError(
                f"Channels must have equal lengths, got {sorted(lengths)}"
            )
        return cls(samples=np.stack(channels, axis=1), sample_rate=sample_rate)

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.samples.shape[1])

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, index: int) -> "TimeSignal":
        return TimeSignal(
            samples=self.samples[:, index].copy(), sample_rate=self.sample_rate
        )

    def channels(self) -> list[FloatArray]:
        return [self.samples[:, m].copy() for m in range(self.n_channels)]


@dataclass(frozen=True)
class Spectrogram:
    """One-sided STFT tensor indexed [f, n, m]."""

    data: ComplexArray
    frame_size: int
    hop: int
    n_samples: int | None = None
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        data = self.data
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3:
            raise exceptions.FrameGeometryError(
                f"Spectrogram data must be (F, N, M), got shape {data.shape}"
            )
        if self.frame_size % 2 or self.hop != self.frame_size // 2:
            raise exceptions.FrameGeometryError(
                f"Expected an even frame size with half overlap, got frame_size={self.frame_size}, hop={self.hop}"
            )
        if data.shape[0] != self.frame_size // 2 + 1:
            raise exceptions.FrameGeometryError(
                f"Expected {self.frame_size // 2 + 1} bins for frame_size={self.frame_size}, got {data.shape[0]}"
            )
        if not np.all(np.isfinite(data)):
            raise exceptions.SignalError("Spectrogram contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def n_freq(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.data.shape[1])

    @property
    def n_channels(self) -> int:
        return int(self.data.shape[2])

    def power(self) -> FloatArray:
        """Frame power ||y_kn||^2 summed over bins, shape (M, N)."""
        return np.sum(np.abs(self.data) ** 2, axis=0).T.copy()

    def with_data(self, data: ComplexArray) -> "Spectrogram":
        return Spectrogram(
            data=data,
            frame_size=self.frame_size,
            hop=self.hop,
            n_samples=self.n_samples,
            sample_rate=self.sample_rate,
        )

    def select(self, channels: Sequence[int]) -> "Spectrogram":
        return self.with_data(self.data[:, :, list(channels)].copy())


"""
--- Separation state ---
"""


class Algorithm(Enum):
    AUXIVA = "auxiva"
    BLINKIVA = "blinkiva"

    @property
    def requires_blinky(self) -> bool:
        return self is Algorithm.BLINKIVA


@dataclass(frozen=True)
class DemixingStack:
    """Per-frequency demixing matrices; row k of W_f is w_fk^H."""

    W: ComplexArray

    def __post_init__(self):
        if self.W.ndim != 3 or self.W.shape[1] != self.W.shape[2]:
            raise exceptions.FrameGeometryError(
                f"Demixing stack must be (F, M, M), got shape {self.W.shape}"
            )

    @classmethod
    def identity(cls, n_freq: int, n_channels: int) -> Self:
        eye = np.eye(n_channels, dtype=np.complex128)
        return cls(W=np.tile(eye, (n_freq, 1, 1)))

    @property
    def n_freq(self) -> int:
        return int(self.W.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.W.shape[1])

    def condition_numbers(self) -> FloatArray:
        return np.asarray(np.linalg.cond(self.W), dtype=np.float64)

    def inverse(self) -> ComplexArray:
        return np.linalg.inv(self.W)


@dataclass
class PowerMatrices:
    """U (B x N) blinky power, G (B x K) gains, R (M x N) variances, P (M x N) frame power."""

    U: FloatArray
    G: FloatArray
    R: FloatArray
    P: FloatArray
    n_coupled: int

    def __post_init__(self):
        n_blinkies, n_frames = self.U.shape
        n_sources, n_frames_r = self.R.shape
        if self.G.shape != (n_blinkies, self.n_coupled):
            raise exceptions.FrameGeometryError(
                f"G must be ({n_blinkies}, {self.n_coupled}), got {self.G.shape}"
            )
        if self.P.shape != self.R.shape or n_frames_r != n_frames:
            raise exceptions.FrameGeometryError(
                f"R and P must be (M, {n_frames}), got {self.R.shape} and {self.P.shape}"
            )
        if not 1 <= self.n_coupled <= n_sources:
            raise exceptions.ConfigurationError(
                f"Coupling rank must satisfy 1 <= K <= M={n_sources}, got {self.n_coupled}"
            )

    @property
    def R_K(self) -> FloatArray:
        return self.R[: self.n_coupled]

    @property
    def P_K(self) -> FloatArray:
        return self.P[: self.n_coupled]


@dataclass
class JointState:
    """All free parameters of the joint model plus the current demixed signals."""

    W: ComplexArray
    Y: ComplexArray
    powers: PowerMatrices
    epsilon: float
    cost_trace: list[float] = field(default_factory=list)

    @property
    def n_freq(self) -> int:
        return int(self.Y.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.Y.shape[1])


@dataclass(frozen=True)
class SeparationResult:
    algorithm: Algorithm
    demixed: Spectrogram
    demixing: DemixingStack
    channels: tuple[int, ...]
    variances: FloatArray
    cost_trace: list[float]
    gains: FloatArray | None = None
    max_normalization_error: float = 0.0

    @property
    def output(self) -> Spectrogram:
        """Demixed spectrogram restricted to the target channels."""
        return self.demixed.select(self.channels)

    @property
    def max_condition_number(self) -> float:
        return float(np.max(self.demixing.condition_numbers()))


"""
--- Evaluation ---
"""


@dataclass(frozen=True)
class EvalReport:
    """SDR/SIR per reference; permutation[j] is the estimate matched to reference j."""

    sdr: list[float]
    sir: list[float]
    permutation: list[int]
    weak_source: int | None = None

    def __post_init__(self):
        n_sources = len(self.permutation)
        if sorted(self.permutation) != list(range(n_sources)):
            raise ValueError(f"Permutation {self.permutation} is not a bijection")
        if len(self.sdr) != n_sources or len(self.sir) != n_sources:
            raise ValueError("SDR, SIR and permutation lengths differ")

    @property
    def n_sources(self) -> int:
        return len(self.permutation)


@dataclass(frozen=True)
class SummaryStats:
    median: float
    q25: float
    q75: float
    count: int


@dataclass(frozen=True)
class Summary:
    sdr: SummaryStats
    sir: SummaryStats
    weak_sdr: SummaryStats | None = None
    weak_sir: SummaryStats | None = None
