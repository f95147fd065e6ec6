import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import Algorithm, FloatArray, TimeSignal

WEAK_SOURCE_VARIANCE = 0.25
MAX_RIR_DELAY = 50


def default_variances(n_sources: int) -> tuple[float, ...]:
    """Source variance profile with one weak source first: (0.25, 1, 1, ...)."""
    return (WEAK_SOURCE_VARIANCE,) + (1.0,) * (n_sources - 1)


@dataclass(frozen=True)
class SceneConfig:
    n_sources: int = 2
    n_mics: int = 2
    n_blinkies: int = 6
    n_interferers: int = 10
    variances: tuple[float, ...] | None = None
    snr_db: float = 60.0
    sinr_db: float | None = 10.0  # None means infinite SINR
    rir_length: int = 2048
    rir_decay_ms: float = 150.0
    seed: int = 0
    duration_s: float = 20.0

    def __post_init__(self):
        if self.n_sources < 1:
            raise exceptions.ConfigurationError(
                f"n_sources must be at least 1, got {self.n_sources}"
            )
        if self.n_sources > self.n_mics:
            raise exceptions.ConfigurationError(
                f"n_sources={self.n_sources} exceeds n_mics={self.n_mics}"
            )
        if self.n_blinkies < 1:
            raise exceptions.ConfigurationError(
                f"n_blinkies must be at least 1, got {self.n_blinkies}"
            )
        if self.n_interferers < 0:
            raise exceptions.ConfigurationError(
                f"n_interferers must be non-negative, got {self.n_interferers}"
            )
        if (self.n_interferers == 0) != (self.sinr_db is None):
            raise exceptions.ConfigurationError(
                "Infinite SINR (sinr_db=null) requires n_interferers=0 and vice versa"
            )
        if self.rir_length <= MAX_RIR_DELAY:
            raise exceptions.ConfigurationError(
                f"rir_length must exceed the maximum delay {MAX_RIR_DELAY}, got {self.rir_length}"
            )
        if self.rir_decay_ms <= 0:
            raise exceptions.ConfigurationError(
                f"rir_decay_ms must be positive, got {self.rir_decay_ms}"
            )
        if self.seed < 0:
            raise exceptions.ConfigurationError(f"seed must be unsigned, got {self.seed}")
        if self.duration_s <= 0:
            raise exceptions.ConfigurationError(
                f"duration_s must be positive, got {self.duration_s}"
            )

        variances = (
            default_variances(self.n_sources)
            if self.variances is None
            else tuple(float(v) for v in self.variances)
        )
        if len(variances) != self.n_sources:
            raise exceptions.ConfigurationError(
                f"Expected {self.n_sources} source variances, got {len(variances)}"
            )
        if any(v <= 0 for v in variances):
            raise exceptions.ConfigurationError(
                f"Source variances must be positive, got {variances}"
            )
        object.__setattr__(self, "variances", variances)

    @property
    def source_variances(self) -> tuple[float, ...]:
        return self.variances or ()

    def for_grid_point(self, n_sources: int, n_mics: int, seed: int) -> "SceneConfig":
        """Copy of this template resized to a grid point; keeps variances only when K matches."""
        variances = self.variances if n_sources == self.n_sources else None
        return replace(
            self, n_sources=n_sources, n_mics=n_mics, seed=seed, variances=variances
        )


@dataclass(frozen=True)
class JointConfig:
    n_iter: int = 100
    nmf_sub_iter: int = 20
    n_coupled: int | None = None  # None couples every separated channel
    epsilon: float | None = None  # None derives the floor from the initial demix
    seed: int = 0

    def __post_init__(self):
        if self.n_iter < 0:
            raise exceptions.ConfigurationError(
                f"n_iter must be non-negative, got {self.n_iter}"
            )
        if self.nmf_sub_iter < 1:
            raise exceptions.ConfigurationError(
                f"nmf_sub_iter must be at least 1, got {self.nmf_sub_iter}"
            )
        if self.n_coupled is not None and self.n_coupled < 1:
            raise exceptions.ConfigurationError(
                f"n_coupled must be at least 1, got {self.n_coupled}"
            )
        if self.epsilon is not None and self.epsilon <= 0:
            raise exceptions.ConfigurationError(
                f"epsilon must be positive, got {self.epsilon}"
            )
        if self.seed < 0:
            raise exceptions.ConfigurationError(f"seed must be unsigned, got {self.seed}")

    def resolve_coupling(self, n_channels: int) -> int:
        n_coupled = n_channels if self.n_coupled is None else self.n_coupled
        if n_coupled > n_channels:
            raise exceptions.ConfigurationError(
                f"Coupling rank K={n_coupled} exceeds the channel count M={n_channels}"
            )
        return n_coupled


@dataclass(frozen=True)
class Scene:
    """Synthetic convolutive mixture with everything needed to evaluate separation."""

    config: SceneConfig
    images: list[TimeSignal]
    mic_signals: TimeSignal
    blinky_mics: TimeSignal
    blinky_power: FloatArray
    references: list[TimeSignal]
    interferers: TimeSignal
    noise: TimeSignal
    noise_variance: float
    interferer_variance: float

    @property
    def sample_rate(self) -> int:
        return self.mic_signals.sample_rate

    @property
    def interference(self) -> TimeSignal:
        """Everything at the microphones that is not a target image."""
        return TimeSignal(
            samples=self.interferers.samples + self.noise.samples,
            sample_rate=self.sample_rate,
        )


@dataclass(frozen=True, slots=True)
class GridPoint:
    n_sources: int
    n_mics: int
    seed: int

    @property
    def feasible(self) -> bool:
        return self.n_mics >= self.n_sources


@dataclass(frozen=True)
class ExperimentPlan:
    n_sources: tuple[int, ...] = (2, 3, 4)
    n_mics: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    algorithms: tuple[Algorithm, ...] = (Algorithm.AUXIVA, Algorithm.BLINKIVA)
    n_seeds: int = 50
    source_wavs: tuple[Path, ...] = ()
    joint: JointConfig = field(default_factory=JointConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    out_dir: Path = Path("results")
    threads: int = 1

    def __post_init__(self):
        if not self.n_sources or not self.n_mics or not self.algorithms:
            raise exceptions.ConfigurationError(
                "Plan grid needs at least one value for n_sources, n_mics and algorithms"
            )
        if self.n_seeds < 1:
            raise exceptions.ConfigurationError(
                f"n_seeds must be at least 1, got {self.n_seeds}"
            )
        if self.threads < 1:
            raise exceptions.ConfigurationError(
                f"threads must be at least 1, got {self.threads}"
            )
        if not any(m >= k for k in self.n_sources for m in self.n_mics):
            raise exceptions.ConfigurationError(
                "Plan has no grid point with n_mics >= n_sources"
            )

    def grid(self) -> list[GridPoint]:
        """All (n_sources, n_mics, seed) points in canonical order, infeasible ones included."""
        return [
            GridPoint(n_sources=k, n_mics=m, seed=self.scene.seed + i)
            for k, m, i in itertools.product(
                sorted(self.n_sources), sorted(self.n_mics), range(self.n_seeds)
            )
        ]

    def feasible_points(self) -> list[GridPoint]:
        return [point for point in self.grid() if point.feasible]

    def skipped_points(self) -> list[GridPoint]:
        return [point for point in self.grid() if not point.feasible]
