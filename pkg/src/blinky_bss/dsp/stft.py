"""
Half-overlap STFT with a square-root periodic Hann window on both sides.

The analysis/synthesis pair satisfies w[t]^2 + w[t + hop]^2 = 1, so overlap-add
reconstructs every sample covered by two frames exactly. Signals are padded with
`hop` zeros in front and enough zeros at the end that every input sample is
covered twice, giving N = ceil(L / hop) + 1 frames.

Spectra are the unnormalized real DFT of each windowed frame with the DC and
Nyquist bins scaled by 1/sqrt(2). With that convention

    sum_f |X[f, n]|^2 = (frame_size / 2) * sum_t (w[t] x_n[t])^2

holds exactly for real input, i.e. the Parseval constant is frame_size / 2.
"""

import math
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import ComplexArray, FloatArray, Spectrogram, TimeSignal

EDGE_BIN_SCALE = 1.0 / math.sqrt(2.0)


def _check_geometry(frame_size: int, hop: int | None) -> int:
    if frame_size < 4 or frame_size % 2:
        raise exceptions.FrameGeometryError(
            f"frame_size must be even and at least 4, got {frame_size}"
        )
    half = frame_size // 2
    if hop is not None and hop != half:
        raise exceptions.FrameGeometryError(
            f"Only half overlap is supported: hop must be {half}, got {hop}"
        )
    return half


@lru_cache(maxsize=8)
def _window(frame_size: int) -> FloatArray:
    window = np.sqrt(get_window("hann", frame_size, fftbins=True))
    window.setflags(write=False)
    return window


def window(frame_size: int) -> FloatArray:
    """Square-root periodic Hann window used for analysis and synthesis."""
    return _window(frame_size).copy()


def parseval_constant(frame_size: int) -> float:
    return frame_size / 2


def frame_count(n_samples: int, frame_size: int) -> int:
    hop = _check_geometry(frame_size, None)
    return -(-n_samples // hop) + 1


def _frames(samples: FloatArray, frame_size: int) -> FloatArray:
    """Windowed frames of a (L, M) array, shape (N, M, frame_size)."""
    hop = frame_size // 2
    n_samples = samples.shape[0]
    n_frames = frame_count(n_samples, frame_size)
    tail = n_frames * hop - n_samples
    padded = np.pad(samples, ((hop, tail), (0, 0)))
    frames = sliding_window_view(padded, frame_size, axis=0)[::hop]
    return frames * _window(frame_size)


def analyze(signal: TimeSignal, frame_size: int, hop: int | None = None) -> Spectrogram:
    """
    Computes the one-sided STFT of every channel.

    Args:
        signal: Multichannel time signal.
        frame_size: Even frame length in samples.
        hop: Frame advance; must equal frame_size // 2 when given.

    Returns:
        Spectrogram with data indexed [f, n, m].

    Raises:
        FrameGeometryError: If the frame size or hop are not supported.
        SignalTooShortError: If the signal is shorter than one frame.
    """
    hop = _check_geometry(frame_size, hop)
    if signal.n_samples < frame_size:
        raise exceptions.SignalTooShortError(
            f"signal too short: {signal.n_samples} samples for frame_size={frame_size}"
        )
    spectra = np.fft.rfft(_frames(signal.samples, frame_size), axis=-1)
    spectra[..., 0] *= EDGE_BIN_SCALE
    spectra[..., -1] *= EDGE_BIN_SCALE
    data = np.ascontiguousarray(np.transpose(spectra, (2, 0, 1)), dtype=np.complex128)
    return Spectrogram(
        data=data,
        frame_size=frame_size,
        hop=hop,
        n_samples=signal.n_samples,
        sample_rate=signal.sample_rate,
    )


def synthesize(spec: Spectrogram) -> TimeSignal:
    """
    Inverts `analyze` by windowed overlap-add.

    Returns exactly `spec.n_samples` samples when the spectrogram records the
    original length, otherwise every sample after the leading padding.
    """
    frame_size, hop = spec.frame_size, spec.hop
    n_frames = spec.n_frames
    if spec.n_samples is not None and frame_count(spec.n_samples, frame_size) != n_frames:
        raise exceptions.FrameGeometryError(
            f"{n_frames} frames do not match n_samples={spec.n_samples} for frame_size={frame_size}"
        )

    spectra: ComplexArray = np.transpose(spec.data, (1, 2, 0)).copy()
    spectra[..., 0] /= EDGE_BIN_SCALE
    spectra[..., -1] /= EDGE_BIN_SCALE
    frames = np.fft.irfft(spectra, n=frame_size, axis=-1) * _window(frame_size)

    blocks = np.zeros((n_frames + 1, spec.n_channels, hop))
    blocks[:n_frames] += frames[..., :hop]
    blocks[1:] += frames[..., hop:]
    samples = blocks.transpose(0, 2, 1).reshape((n_frames + 1) * hop, spec.n_channels)

    n_samples = spec.n_samples if spec.n_samples is not None else n_frames * hop
    return TimeSignal(
        samples=samples[hop : hop + n_samples].copy(), sample_rate=spec.sample_rate
    )


def frame_energies(signal: TimeSignal, frame_size: int) -> FloatArray:
    """Time-domain windowed frame energies sum_t (w[t] x_n[t])^2, shape (M, N)."""
    _check_geometry(frame_size, None)
    frames = _frames(signal.samples, frame_size)
    return np.sum(frames**2, axis=-1).T.copy()
