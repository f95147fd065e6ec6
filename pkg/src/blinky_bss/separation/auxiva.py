"""Determined AuxIVA baseline with a time-varying Gauss source model.

Each iteration is one IP sweep followed by a demix and a normalization of every
output to unit mean variance, the joint iteration without its blinky terms.
"""

from dataclasses import replace
from typing import final, override

import numpy as np
from structlog import get_logger

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import (
    Algorithm,
    ComplexArray,
    DemixingStack,
    FloatArray,
    SeparationResult,
    Spectrogram,
)
from blinky_bss.domain.ports import Separator
from blinky_bss.separation import linalg
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()

EPSILON_SCALE = 1e-10


def variance_floor(P: FloatArray, n_freq: int) -> float:
    """eps = 1e-10 * mean(P / F)."""
    return EPSILON_SCALE * float(np.mean(P)) / n_freq


def gauss_variances(P: FloatArray, n_freq: int, epsilon: float) -> FloatArray:
    """r_kn = max(eps, ||y_kn||^2 / F)."""
    return np.maximum(P / n_freq, epsilon)


def auxiva_cost(W: ComplexArray, P: FloatArray, R: FloatArray) -> float:
    """-2N sum_f log|det W_f| + sum_kn (P/r + F log r), the joint cost without blinkies."""
    if np.any(R <= 0):
        raise exceptions.InvalidJointStateError("Source variances must be positive")
    n_freq = W.shape[0]
    n_frames = P.shape[1]
    return float(
        -2.0 * n_frames * np.sum(linalg.log_abs_det(W))
        + np.sum(P / R + n_freq * np.log(R))
    )


def ip_surrogate(W: ComplexArray, X: ComplexArray, R: FloatArray, epsilon: float) -> float:
    """
    The function the IP sweep minimizes for fixed R:
    -2N sum_f log|det W_f| + N sum_fk w_fk^H V_fk w_fk.
    """
    n_frames = X.shape[1]
    Y = linalg.demix(W, X)
    weights = linalg.ip_weights(R, epsilon)
    quadratic = np.sum((Y.real**2 + Y.imag**2) * weights.T[np.newaxis, :, :])
    return float(-2.0 * n_frames * np.sum(linalg.log_abs_det(W)) + quadratic)


def select_channels(demixed: Spectrogram, n_sources: int) -> list[int]:
    """Indices of the `n_sources` channels with the largest total power, descending."""
    if not 1 <= n_sources <= demixed.n_channels:
        raise exceptions.ConfigurationError(
            f"Cannot select {n_sources} of {demixed.n_channels} channels"
        )
    power = np.sum(np.abs(demixed.data) ** 2, axis=(0, 1))
    return [int(m) for m in np.argsort(-power, kind="stable")[:n_sources]]


@final
class AuxIVASeparator(Separator):
    algorithm = Algorithm.AUXIVA

    def __init__(self, n_iter: int = 100, epsilon: float | None = None):
        if n_iter < 0:
            raise exceptions.ConfigurationError(f"n_iter must be non-negative, got {n_iter}")
        self.n_iter = n_iter
        self.epsilon = epsilon

    def run(self, spec: Spectrogram) -> SeparationResult:
        """Separates all M channels; every channel is reported as a target."""
        X = spec.data
        n_freq, n_frames, n_channels = X.shape
        W = DemixingStack.identity(n_freq, n_channels).W
        Y = X.copy()
        P = linalg.frame_power(Y)
        epsilon = self.epsilon if self.epsilon is not None else variance_floor(P, n_freq)
        if self.n_iter and epsilon <= 0:
            raise exceptions.InvalidJointStateError("Input spectrogram has no energy")

        logger.info(
            "Starting AuxIVA",
            n_freq=n_freq,
            n_frames=n_frames,
            n_channels=n_channels,
            n_iter=self.n_iter,
        )
        cost_trace: list[float] = []
        max_residual = 0.0
        for iteration in range(self.n_iter):
            R = gauss_variances(P, n_freq, epsilon)
            try:
                residual = linalg.iterative_projection(W, X, R, epsilon)
            except exceptions.SingularUpdateError as e:
                logger.error(f"AuxIVA failed at iteration {iteration}: {e}")
                raise
            max_residual = max(max_residual, residual)
            Y = linalg.demix(W, X)
            P = linalg.frame_power(Y)
            # unit mean variance per output
            scale = gauss_variances(P, n_freq, epsilon).mean(axis=1)
            W, Y, P = linalg.scale_rows(W, Y, P, scale)
            cost = auxiva_cost(W, P, gauss_variances(P, n_freq, epsilon))
            cost_trace.append(cost)
            logger.debug(
                "AuxIVA iteration", iteration=iteration, cost=cost, residual=residual
            )

        R = np.maximum(P / n_freq, epsilon)
        logger.info("AuxIVA finished", final_cost=cost_trace[-1] if cost_trace else None)
        return SeparationResult(
            algorithm=self.algorithm,
            demixed=spec.with_data(Y),
            demixing=DemixingStack(W=W),
            channels=tuple(range(n_channels)),
            variances=R,
            cost_trace=cost_trace,
            max_normalization_error=max_residual,
        )

    @override
    def separate(
        self,
        spec: Spectrogram,
        n_sources: int,
        blinky_power: FloatArray | None = None,
    ) -> SeparationResult:
        """Runs AuxIVA and keeps the `n_sources` most powerful outputs; blinky data is ignored."""
        result = self.run(spec)
        channels = select_channels(result.demixed, n_sources)
        return replace(result, channels=tuple(channels))


def auxiva_run(spec: Spectrogram, n_iter: int) -> tuple[Spectrogram, DemixingStack]:
    """Runs `n_iter` AuxIVA iterations from W = I; returns (demixed, demixing stack)."""
    result = AuxIVASeparator(n_iter=n_iter).run(spec)
    return result.demixed, result.demixing
