"""
Global bss_eval source metrics (SDR, SIR) with permutation resolution.

Each estimate is decomposed by least-squares projections onto `filter_len`
delayed copies of the references: the projection onto its own reference is the
target, the extra part explained by the other references is interference and
the rest is artifacts.
"""

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.linalg import LinAlgError, cho_factor, cho_solve, toeplitz
from scipy.signal import fftconvolve

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import (
    DB_CAP,
    EvalReport,
    FloatArray,
    Summary,
    SummaryStats,
    TimeSignal,
)

DEFAULT_FILTER_LEN = 512
GRAM_REGULARIZATION = 1e-10
WEAK_SOURCE_INDEX = 0


def safe_db(numerator: float, denominator: float) -> float:
    """10 log10(num / den) clipped to [-DB_CAP, DB_CAP]."""
    if numerator <= 0.0:
        return -DB_CAP
    if denominator <= 0.0:
        return DB_CAP
    return float(np.clip(10 * math.log10(numerator / denominator), -DB_CAP, DB_CAP))


def _stack_mono(signals: Sequence[TimeSignal], name: str) -> FloatArray:
    if not signals:
        raise exceptions.SignalError(f"At least one {name} signal is required")
    lengths = {signal.n_samples for signal in signals}
    if len(lengths) != 1:
        raise exceptions.SignalError(f"All {name} signals must have equal lengths")
    return np.stack([signal.samples[:, 0] for signal in signals])


@dataclass
class _Projector:
    """Cached FFTs and factorized Gram matrices of the shifted references."""

    references: FloatArray
    filter_len: int
    n_fft: int
    spectra: np.ndarray
    full: tuple
    single: list[tuple]

    @classmethod
    def build(cls, references: FloatArray, filter_len: int) -> "_Projector":
        n_sources, n_samples = references.shape
        n_fft = int(scipy.fft.next_fast_len(n_samples + filter_len - 1, real=True))
        spectra = scipy.fft.rfft(references, n=n_fft, axis=1)

        blocks = [slice(j * filter_len, (j + 1) * filter_len) for j in range(n_sources)]
        gram = np.zeros((n_sources * filter_len, n_sources * filter_len))
        for i in range(n_sources):
            for j in range(i, n_sources):
                xcorr = scipy.fft.irfft(spectra[i] * np.conj(spectra[j]), n=n_fft)
                block = toeplitz(
                    np.hstack((xcorr[0], xcorr[-1 : -filter_len : -1])),
                    r=xcorr[:filter_len],
                )
                gram[blocks[i], blocks[j]] = block
                gram[blocks[j], blocks[i]] = block.T

        gram += GRAM_REGULARIZATION * np.trace(gram) * np.eye(gram.shape[0])
        single = [cho_factor(gram[block, block]) for block in blocks]
        return cls(
            references=references,
            filter_len=filter_len,
            n_fft=n_fft,
            spectra=spectra,
            full=cho_factor(gram),
            single=single,
        )

    def correlations(self, estimate: FloatArray) -> FloatArray:
        """Inner products of the estimate with every delayed reference, shape (K * L,)."""
        estimate_spectrum = scipy.fft.rfft(estimate, n=self.n_fft)
        xcorr = scipy.fft.irfft(
            self.spectra * np.conj(estimate_spectrum), n=self.n_fft, axis=1
        )
        lagged = np.hstack((xcorr[:, :1], xcorr[:, -1 : -self.filter_len : -1]))
        return lagged.reshape(-1)

    def _filter(self, coefficients: FloatArray, sources: list[int]) -> FloatArray:
        n_samples = self.references.shape[1]
        projection = np.zeros(n_samples + self.filter_len - 1)
        for column, j in enumerate(sources):
            projection += fftconvolve(coefficients[:, column], self.references[j])
        return projection

    def project_all(self, correlations: FloatArray) -> FloatArray:
        coefficients = cho_solve(self.full, correlations)
        n_sources = self.references.shape[0]
        coefficients = coefficients.reshape(self.filter_len, n_sources, order="F")
        return self._filter(coefficients, list(range(n_sources)))

    def project_one(self, correlations: FloatArray, j: int) -> FloatArray:
        block = correlations[j * self.filter_len : (j + 1) * self.filter_len]
        coefficients = cho_solve(self.single[j], block)
        return self._filter(coefficients[:, np.newaxis], [j])


def _criteria(
    target: FloatArray, interference: FloatArray, artifacts: FloatArray
) -> tuple[float, float]:
    target_energy = float(np.sum(target**2))
    sdr = safe_db(target_energy, float(np.sum((interference + artifacts) ** 2)))
    sir = safe_db(target_energy, float(np.sum(interference**2)))
    return sdr, sir


def pairwise_criteria(
    references: Sequence[TimeSignal],
    estimates: Sequence[TimeSignal],
    filter_len: int = DEFAULT_FILTER_LEN,
) -> tuple[FloatArray, FloatArray]:
    """
    SDR and SIR of every estimate against every reference.

    Returns:
        (sdr, sir) matrices indexed [estimate, reference].

    Raises:
        SignalError: If counts or lengths differ.
        ZeroEnergyReferenceError: If a reference is silent.
    """
    reference_matrix = _stack_mono(references, "reference")
    estimate_matrix = _stack_mono(estimates, "estimate")
    if estimate_matrix.shape != reference_matrix.shape:
        raise exceptions.SignalError(
            f"Estimates {estimate_matrix.shape} and references {reference_matrix.shape} differ in shape"
        )
    if filter_len < 1:
        raise exceptions.ConfigurationError(
            f"filter_len must be positive, got {filter_len}"
        )
    silent = np.flatnonzero(np.sum(reference_matrix**2, axis=1) == 0)
    if silent.size:
        raise exceptions.ZeroEnergyReferenceError(
            f"Reference {int(silent[0])} has zero energy"
        )

    try:
        projector = _Projector.build(reference_matrix, filter_len)
    except LinAlgError as e:
        raise exceptions.ZeroEnergyReferenceError(
            "Reference Gram matrix is not positive definite"
        ) from e

    n_sources = reference_matrix.shape[0]
    sdr = np.empty((n_sources, n_sources))
    sir = np.empty((n_sources, n_sources))
    for i, estimate in enumerate(estimate_matrix):
        correlations = projector.correlations(estimate)
        everything = projector.project_all(correlations)
        artifacts = np.hstack((estimate, np.zeros(filter_len - 1))) - everything
        for j in range(n_sources):
            target = projector.project_one(correlations, j)
            sdr[i, j], sir[i, j] = _criteria(target, everything - target, artifacts)
    return sdr, sir


def bss_eval(
    references: Sequence[TimeSignal],
    estimates: Sequence[TimeSignal],
    filter_len: int = DEFAULT_FILTER_LEN,
    weak_source: int | None = WEAK_SOURCE_INDEX,
) -> EvalReport:
    """
    Computes SDR and SIR for every reference, matching estimates by the
    permutation with the largest mean SIR.

    Args:
        references: K clean mono reference signals.
        estimates: K mono estimates of the same length.
        filter_len: Number of taps of the distortion filters.
        weak_source: Reference index flagged as the weak source in the report.

    Returns:
        EvalReport indexed by reference; permutation[j] is the matched estimate.
    """
    sdr, sir = pairwise_criteria(references, estimates, filter_len)
    n_sources = sdr.shape[0]
    if weak_source is not None and not 0 <= weak_source < n_sources:
        weak_source = None

    columns = np.arange(n_sources)
    permutations = list(itertools.permutations(range(n_sources)))
    mean_sir = [float(np.mean(sir[list(perm), columns])) for perm in permutations]
    best = list(permutations[int(np.argmax(mean_sir))])

    return EvalReport(
        sdr=sdr[best, columns].tolist(),
        sir=sir[best, columns].tolist(),
        permutation=[int(i) for i in best],
        weak_source=weak_source,
    )


def sir_improvement(
    references: Sequence[TimeSignal],
    estimates: Sequence[TimeSignal],
    mixture: TimeSignal,
    filter_len: int = DEFAULT_FILTER_LEN,
) -> list[float]:
    """Per-reference SIR of the estimates minus that of the unprocessed mixture channel."""
    processed = bss_eval(references, estimates, filter_len)
    unprocessed = bss_eval(references, [mixture.channel(0)] * len(references), filter_len)
    return [after - before for after, before in zip(processed.sir, unprocessed.sir)]


def _stats(values: Sequence[float]) -> SummaryStats:
    array = np.asarray(values, dtype=np.float64)
    q25, median, q75 = np.percentile(array, [25, 50, 75], method="linear")
    return SummaryStats(
        median=float(median), q25=float(q25), q75=float(q75), count=int(array.size)
    )


def summarize(reports: Sequence[EvalReport]) -> Summary:
    """
    Median and quartiles (numpy linear interpolation) of SDR and SIR over all
    sources of all reports, plus the same statistics for the weak source alone.
    """
    if not reports:
        raise ValueError("Cannot summarize an empty list of reports")
    sdr = [value for report in reports for value in report.sdr]
    sir = [value for report in reports for value in report.sir]
    weak = [
        (report.sdr[report.weak_source], report.sir[report.weak_source])
        for report in reports
        if report.weak_source is not None
    ]
    return Summary(
        sdr=_stats(sdr),
        sir=_stats(sir),
        weak_sdr=_stats([value for value, _ in weak]) if weak else None,
        weak_sir=_stats([value for _, value in weak]) if weak else None,
    )
