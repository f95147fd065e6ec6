from functools import lru_cache

from blinky_bss import config
from blinky_bss.adapters.audio.soundfile_storage import SoundfileAudioStorage
from blinky_bss.config import get_app_config
from blinky_bss.domain import ports


@lru_cache
def get_config() -> config.AppConfig:
    """Retrieve the application configuration

    Returns:
        The cached AppConfig instance
    """
    return get_app_config()


@lru_cache
def get_audio_storage() -> ports.AudioStorage:
    """WAV storage at the configured sample rate."""
    return SoundfileAudioStorage.from_config(get_config())
