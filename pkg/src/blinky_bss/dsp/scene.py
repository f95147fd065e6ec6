import math

import numpy as np
from scipy.signal import butter, get_window, oaconvolve, sosfilt
from structlog import get_logger

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import DEFAULT_SAMPLE_RATE, FloatArray, TimeSignal
from blinky_bss.domain.structs import MAX_RIR_DELAY, Scene, SceneConfig
from blinky_bss.dsp import stft
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()

DEFAULT_FRAME_SIZE = 4096
SPEECH_BAND_HZ = (100.0, 4000.0)
BLINKY_NEAR_M = (0.2, 0.5)
BLINKY_FAR_M = (1.5, 3.0)
INTERFERER_DISTANCE_M = (4.0, 6.0)
BLINKY_DECAY_SPREAD = (0.5, 1.5)
SYLLABLE_ON_S = (0.1, 0.4)
SYLLABLE_OFF_S = (0.05, 0.3)
ENVELOPE_SMOOTHING_S = 0.02


def generate_rir(
    decay_ms: float,
    length: int,
    delay: int,
    rng: np.random.Generator,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> FloatArray:
    """
    Synthetic room impulse response: a unit tap at `delay` followed by a
    zero-mean Gaussian tail whose amplitude envelope falls by 60 dB after
    `decay_ms` milliseconds.

    Raises:
        ConfigurationError: If the decay is not positive or the delay falls outside the filter.
    """
    if decay_ms <= 0:
        raise exceptions.ConfigurationError(f"RIR decay must be positive, got {decay_ms} ms")
    if not 0 <= delay < length:
        raise exceptions.ConfigurationError(
            f"RIR delay must satisfy 0 <= delay < length, got delay={delay}, length={length}"
        )
    tau = decay_ms * 1e-3 * sample_rate / math.log(1000.0)
    lags = np.arange(1, length - delay)
    rir = np.zeros(length)
    rir[delay] = 1.0
    rir[delay + 1 :] = (
        math.sqrt(2.0 / tau) * rng.standard_normal(lags.size) * np.exp(-lags / tau)
    )
    return rir


def _speech_band(sample_rate: int) -> FloatArray:
    low, high = SPEECH_BAND_HZ
    high = min(high, 0.45 * sample_rate)
    return butter(4, [low, high], btype="bandpass", fs=sample_rate, output="sos")


def _unit_power(x: FloatArray) -> FloatArray:
    power = float(np.mean(x**2))
    if power == 0.0:
        raise exceptions.SignalError("Cannot normalize a silent signal")
    return x / math.sqrt(power)


def speech_shaped_noise(
    n_samples: int, sample_rate: int, rng: np.random.Generator
) -> FloatArray:
    """Gaussian noise band-limited to the speech band, unit power."""
    noise = rng.standard_normal(n_samples)
    return _unit_power(sosfilt(_speech_band(sample_rate), noise))


def _syllabic_envelope(
    n_samples: int, sample_rate: int, rng: np.random.Generator
) -> FloatArray:
    gates = np.zeros(n_samples)
    position = int(rng.integers(0, int(0.1 * sample_rate)))
    while position < n_samples:
        on = int(rng.uniform(*SYLLABLE_ON_S) * sample_rate)
        off = int(rng.uniform(*SYLLABLE_OFF_S) * sample_rate)
        gates[position : position + on] = 1.0
        position += on + off
    smoothing = get_window("hann", max(int(ENVELOPE_SMOOTHING_S * sample_rate), 3))
    return np.convolve(gates, smoothing / smoothing.sum(), mode="same")


def speech_like_source(
    n_samples: int, sample_rate: int, rng: np.random.Generator
) -> FloatArray:
    """
    Stand-in for a speech utterance: speech-band noise gated by a random,
    smoothed syllable-rate on/off envelope, normalized to unit power.
    """
    band = speech_shaped_noise(n_samples, sample_rate, rng)
    envelope = _syllabic_envelope(n_samples, sample_rate, rng)
    if not np.any(envelope):
        return band
    return _unit_power(band * envelope)


def _power(x: FloatArray) -> float:
    return float(np.mean(x**2))


def _convolve(signal: FloatArray, rirs: FloatArray, n_samples: int) -> FloatArray:
    """Filters a mono signal through one RIR per column, truncated to the input length."""
    return oaconvolve(signal[:, np.newaxis], rirs, axes=0)[:n_samples]


def _mic_rirs(
    config: SceneConfig, rng: np.random.Generator, sample_rate: int
) -> FloatArray:
    rirs = [
        generate_rir(
            config.rir_decay_ms,
            config.rir_length,
            int(rng.integers(0, MAX_RIR_DELAY + 1)),
            rng,
            sample_rate,
        )
        for _ in range(config.n_mics)
    ]
    return np.stack(rirs, axis=1)


def blinky_distances(config: SceneConfig, rng: np.random.Generator) -> FloatArray:
    """
    Distance from every blinky (rows) to every emitter (columns: targets, then interferers).

    Blinky b sits next to target b mod K and further from the other targets. The
    interferers stand beyond the blinky area, on the far side of the array.
    """
    n_targets = config.n_sources
    distances = np.empty((config.n_blinkies, n_targets + config.n_interferers))
    distances[:, :n_targets] = rng.uniform(
        *BLINKY_FAR_M, size=(config.n_blinkies, n_targets)
    )
    owner = np.arange(config.n_blinkies) % n_targets
    distances[np.arange(config.n_blinkies), owner] = rng.uniform(
        *BLINKY_NEAR_M, size=config.n_blinkies
    )
    distances[:, n_targets:] = rng.uniform(
        *INTERFERER_DISTANCE_M, size=(config.n_blinkies, config.n_interferers)
    )
    return distances


def _blinky_rirs(
    config: SceneConfig,
    distances: FloatArray,
    rng: np.random.Generator,
    sample_rate: int,
) -> FloatArray:
    """One RIR per blinky for a single emitter, attenuated as 1/distance."""
    rirs = []
    for distance in distances:
        decay_ms = config.rir_decay_ms * rng.uniform(*BLINKY_DECAY_SPREAD)
        delay = int(rng.integers(0, MAX_RIR_DELAY + 1))
        rir = generate_rir(decay_ms, config.rir_length, delay, rng, sample_rate)
        rirs.append(rir / distance)
    return np.stack(rirs, axis=1)


def calibrate(config: SceneConfig) -> tuple[float, float]:
    """
    Solves the level targets for the noise and per-interferer variances.

    Returns:
        (noise_variance, interferer_variance); the latter is 0 for infinite SINR.

    Raises:
        InfeasibleSINRError: If the SINR target leaves no room for interference.
    """
    variances = np.asarray(config.source_variances)
    noise_variance = float(variances.mean() / 10 ** (config.snr_db / 10))
    if config.sinr_db is None:
        return noise_variance, 0.0
    interferer_variance = float(
        (variances.sum() / 10 ** (config.sinr_db / 10) - noise_variance)
        / config.n_interferers
    )
    if interferer_variance <= 0:
        raise exceptions.InfeasibleSINRError(
            f"infeasible SINR: {config.sinr_db} dB is not reachable with SNR {config.snr_db} dB"
        )
    return noise_variance, interferer_variance


def blinky_signals(
    blinky_mics: TimeSignal, frame_size: int, hop: int | None = None
) -> FloatArray:
    """Blinky power u_bn = sum_f |X_b[f, n]|^2, shape (B, N)."""
    return stft.analyze(blinky_mics, frame_size, hop).power()


def mix(
    config: SceneConfig,
    sources: list[TimeSignal],
    rng: np.random.Generator,
    frame_size: int = DEFAULT_FRAME_SIZE,
) -> Scene:
    """
    Builds a reverberant mixture at the microphones and blinkies.

    Each source is filtered through its own RIRs and scaled so its image at the
    first microphone has the configured variance. Interferers (speech-shaped
    noise) and white noise are added at the levels returned by `calibrate`.

    Args:
        config: Scene description.
        sources: One mono signal per target source, at least `duration_s` long.
        rng: Random generator driving RIRs, interferers and noise.
        frame_size: STFT frame size used for the blinky power.

    Raises:
        ConfigurationError: If the number of sources does not match the config.
        SignalTooShortError: If a source is shorter than the scene duration or one frame.
        InfeasibleSINRError: If the level targets cannot be met.
    """
    if len(sources) != config.n_sources:
        raise exceptions.ConfigurationError(
            f"Expected {config.n_sources} sources, got {len(sources)}"
        )
    sample_rate = sources[0].sample_rate
    if any(source.sample_rate != sample_rate for source in sources):
        raise exceptions.SignalError("All sources must share one sample rate")
    n_samples = int(round(config.duration_s * sample_rate))
    if n_samples < frame_size:
        raise exceptions.SignalTooShortError(
            f"signal too short: duration {config.duration_s} s is under one frame of {frame_size} samples"
        )
    if any(source.n_samples < n_samples for source in sources):
        raise exceptions.SignalTooShortError(
            f"signal too short: every source needs at least {n_samples} samples"
        )

    noise_variance, interferer_variance = calibrate(config)
    distances = blinky_distances(config, rng)

    images: list[TimeSignal] = []
    blinky_mix = np.zeros((n_samples, config.n_blinkies))
    for k, (source, variance) in enumerate(zip(sources, config.source_variances)):
        signal = source.samples[:n_samples, 0]
        mic_image = _convolve(signal, _mic_rirs(config, rng, sample_rate), n_samples)
        blinky_image = _convolve(
            signal, _blinky_rirs(config, distances[:, k], rng, sample_rate), n_samples
        )
        reference_power = _power(mic_image[:, 0])
        if reference_power == 0.0:
            raise exceptions.SignalError(f"Source {k} is silent")
        gain = math.sqrt(variance / reference_power)
        images.append(TimeSignal(samples=mic_image * gain, sample_rate=sample_rate))
        blinky_mix += blinky_image * gain

    interferers = np.zeros((n_samples, config.n_mics))
    for q in range(config.n_interferers):
        signal = speech_shaped_noise(n_samples, sample_rate, rng)
        mic_image = _convolve(signal, _mic_rirs(config, rng, sample_rate), n_samples)
        blinky_image = _convolve(
            signal,
            _blinky_rirs(config, distances[:, config.n_sources + q], rng, sample_rate),
            n_samples,
        )
        gain = math.sqrt(interferer_variance / _power(mic_image[:, 0]))
        interferers += mic_image * gain
        blinky_mix += blinky_image * gain

    noise_std = math.sqrt(noise_variance)
    noise = noise_std * rng.standard_normal((n_samples, config.n_mics))
    blinky_mix += noise_std * rng.standard_normal((n_samples, config.n_blinkies))

    mic_samples = sum((image.samples for image in images), interferers + noise)
    blinky_mics = TimeSignal(samples=blinky_mix, sample_rate=sample_rate)
    scene = Scene(
        config=config,
        images=images,
        mic_signals=TimeSignal(samples=mic_samples, sample_rate=sample_rate),
        blinky_mics=blinky_mics,
        blinky_power=blinky_signals(blinky_mics, frame_size),
        references=[image.channel(0) for image in images],
        interferers=TimeSignal(samples=interferers, sample_rate=sample_rate),
        noise=TimeSignal(samples=noise, sample_rate=sample_rate),
        noise_variance=noise_variance,
        interferer_variance=interferer_variance,
    )

    snr_db, sinr_db = measure_ratios(scene)
    logger.info(
        "Scene mixed",
        seed=config.seed,
        n_sources=config.n_sources,
        n_mics=config.n_mics,
        n_blinkies=config.n_blinkies,
        noise_variance=noise_variance,
        interferer_variance=interferer_variance,
        measured_snr_db=round(snr_db, 3),
        measured_sinr_db=round(sinr_db, 3),
    )
    return scene


def measure_ratios(scene: Scene) -> tuple[float, float]:
    """Empirical (SNR, SINR) in dB at the first microphone."""
    signal_powers = np.array([_power(image.samples[:, 0]) for image in scene.images])
    noise_power = _power(scene.noise.samples[:, 0])
    interference_power = _power(scene.interference.samples[:, 0])
    if noise_power == 0.0 or interference_power == 0.0:
        raise exceptions.SignalError("Scene has no noise to measure ratios against")
    snr_db = 10 * math.log10(float(signal_powers.mean()) / noise_power)
    sinr_db = 10 * math.log10(float(signal_powers.sum()) / interference_power)
    return snr_db, sinr_db
