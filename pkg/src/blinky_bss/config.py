from functools import lru_cache
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from blinky_bss.utils.misc import nobeartype
from blinky_bss.utils.shared import REPO_ROOT

_ = load_dotenv()

LOG_LEVELS = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


@nobeartype
class SignalSettings(BaseSettings):
    sample_rate: int = 16000
    frame_size: int = 4096

    @field_validator("sample_rate")
    @classmethod
    def validate_sample_rate(cls, value: int) -> int:
        if value <= 0:
            raise ValueError(f"Field `sample_rate` must be positive, got {value}")
        return value

    @field_validator("frame_size")
    @classmethod
    def validate_frame_size(cls, value: int) -> int:
        if value < 4 or value % 2:
            raise ValueError(
                f"Field `frame_size` must be an even number of samples >= 4, got {value}"
            )
        return value

    @property
    def hop(self) -> int:
        return self.frame_size // 2


class AppConfig(SignalSettings):
    model_config = SettingsConfigDict(
        env_prefix="BLINKY_BSS_", env_file=REPO_ROOT / ".env", extra="allow"
    )

    log_level: LOG_LEVELS = "INFO"
    logs_dir: Path = Path("logs")

    threads: int = 1
    results_dir: Path = Path("results")

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"Field `threads` must be at least 1, got {value}")
        return value


@lru_cache()
def get_app_config() -> AppConfig:
    return AppConfig()
