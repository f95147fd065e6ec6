from pathlib import Path
from typing import ClassVar, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator

from blinky_bss.domain import exceptions, model, structs


class _Document(BaseModel):
    model_config: ClassVar[ConfigDict] = ConfigDict(extra="forbid")

    @classmethod
    def from_file(cls, file_path: Path) -> Self:
        """
        Raises:
            ConfigurationError: If the file cannot be read.
            ValidationError: If the document does not match the schema.
        """
        try:
            text = file_path.read_text(encoding="utf-8")
        except OSError as e:
            raise exceptions.ConfigurationError(
                f"Could not read config file {file_path}: {e}"
            ) from e
        return cls.model_validate_json(text)


class SceneConfigSchema(_Document):
    """Scene description; `sinr_db: null` stands for infinite SINR (no interferers)."""

    n_sources: int = Field(2, ge=1)
    n_mics: int = Field(2, ge=1)
    n_blinkies: int = Field(6, ge=1)
    n_interferers: int = Field(10, ge=0)
    variances: list[float] | None = None
    snr_db: float = 60.0
    sinr_db: float | None = 10.0
    rir_length: int = Field(2048, gt=structs.MAX_RIR_DELAY)
    rir_decay_ms: float = Field(150.0, gt=0)
    seed: int = Field(0, ge=0)
    duration_s: float = Field(20.0, gt=0)

    @field_validator("variances")
    @classmethod
    def validate_variances(cls, v: list[float] | None) -> list[float] | None:
        if v is not None and any(value <= 0 for value in v):
            raise ValueError("Source variances must be positive")
        return v

    def to_domain(self) -> structs.SceneConfig:
        return structs.SceneConfig(
            n_sources=self.n_sources,
            n_mics=self.n_mics,
            n_blinkies=self.n_blinkies,
            n_interferers=self.n_interferers,
            variances=None if self.variances is None else tuple(self.variances),
            snr_db=self.snr_db,
            sinr_db=self.sinr_db,
            rir_length=self.rir_length,
            rir_decay_ms=self.rir_decay_ms,
            seed=self.seed,
            duration_s=self.duration_s,
        )


class JointConfigSchema(_Document):
    n_iter: int = Field(100, ge=0)
    nmf_sub_iter: int = Field(20, ge=1)
    n_coupled: int | None = Field(None, ge=1)
    epsilon: float | None = Field(None, gt=0)
    seed: int = Field(0, ge=0)

    def to_domain(self) -> structs.JointConfig:
        return structs.JointConfig(
            n_iter=self.n_iter,
            nmf_sub_iter=self.nmf_sub_iter,
            n_coupled=self.n_coupled,
            epsilon=self.epsilon,
            seed=self.seed,
        )


class ExperimentPlanSchema(_Document):
    """Benchmark grid; `out_dir` and `threads` fall back to the application settings."""

    n_sources: list[int] = Field(default_factory=lambda: [2, 3, 4], min_length=1)
    n_mics: list[int] = Field(default_factory=lambda: [2, 3, 4, 5, 6, 7], min_length=1)
    algorithms: list[model.Algorithm] = Field(
        default_factory=lambda: [model.Algorithm.AUXIVA, model.Algorithm.BLINKIVA],
        min_length=1,
    )
    n_seeds: int = Field(50, ge=1)
    source_wavs: list[Path] = Field(default_factory=list)
    joint: JointConfigSchema = Field(default_factory=JointConfigSchema)
    scene: SceneConfigSchema = Field(default_factory=SceneConfigSchema)
    out_dir: Path | None = None
    threads: int | None = Field(None, ge=1)

    @field_validator("source_wavs")
    @classmethod
    def validate_source_wavs(cls, v: list[Path]) -> list[Path]:
        missing = [str(path) for path in v if not path.is_file()]
        if missing:
            raise ValueError(f"Source WAV files do not exist: {', '.join(missing)}")
        return v

    @field_validator("n_sources", "n_mics")
    @classmethod
    def validate_counts(cls, v: list[int]) -> list[int]:
        if any(value < 1 for value in v):
            raise ValueError("Grid counts must be positive")
        return sorted(set(v))

    def to_domain(self, default_out_dir: Path, default_threads: int) -> structs.ExperimentPlan:
        return structs.ExperimentPlan(
            n_sources=tuple(self.n_sources),
            n_mics=tuple(self.n_mics),
            algorithms=tuple(dict.fromkeys(self.algorithms)),
            n_seeds=self.n_seeds,
            source_wavs=tuple(self.source_wavs),
            joint=self.joint.to_domain(),
            scene=self.scene.to_domain(),
            out_dir=self.out_dir or default_out_dir,
            threads=self.threads or default_threads,
        )
