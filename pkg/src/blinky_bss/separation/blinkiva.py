"""
Joint separation of sources and sound power.

Each outer iteration runs a few IS-NMF sub-iterations on the coupled variances
R_K and gains G, refreshes the uncoupled variances from the demixed power, runs
one IP sweep with floored weights, demixes and finally rescales every variable
so that each row of R has mean 1. The cost is logged after the rescale.
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
    JointState,
    PowerMatrices,
    SeparationResult,
    Spectrogram,
)
from blinky_bss.domain.ports import Separator
from blinky_bss.domain.structs import JointConfig
from blinky_bss.separation import linalg, nmf
from blinky_bss.separation.auxiva import variance_floor
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()


def cost_J(state: JointState) -> float:
    """
    Negative log-likelihood of the joint model without its constant term:

        -2N sum_f log|det W_f| + sum_kn (P_kn / r_kn + F log r_kn)
        + sum_bn (F log (G R_K)_bn + u_bn / (2 (G R_K)_bn))

    Raises:
        InvalidJointStateError: If a variance or blinky mixture variance is not positive.
    """
    powers = state.powers
    n_freq, n_frames = state.n_freq, state.n_frames
    if np.any(powers.R <= 0) or not np.all(np.isfinite(powers.R)):
        raise exceptions.InvalidJointStateError("Source variances must be positive")
    mixture = powers.G @ powers.R_K
    if np.any(mixture <= 0):
        raise exceptions.InvalidJointStateError(
            "Blinky mixture variances G R_K must be positive"
        )
    demixing = -2.0 * n_frames * float(np.sum(linalg.log_abs_det(state.W)))
    sources = float(np.sum(powers.P / powers.R + n_freq * np.log(powers.R)))
    blinkies = float(np.sum(n_freq * np.log(mixture) + powers.U / (2.0 * mixture)))
    return demixing + sources + blinkies


def update_uncoupled_variances(
    P: FloatArray, n_coupled: int, n_freq: int, epsilon: float = 0.0
) -> FloatArray:
    """r_kn = max(eps, ||y_kn||^2 / F) for the rows k >= K; empty when K = M."""
    return np.maximum(P[n_coupled:] / n_freq, epsilon)


def rescale(state: JointState) -> JointState:
    """
    Normalizes every row of R to mean 1 without changing the cost:
    R <- L^-1 R, G <- G L_K, W_f <- L^-1/2 W_f, P <- L^-1 P with L = diag(mean_n R).

    Raises:
        InvalidJointStateError: If a row of R has a non-positive mean.
    """
    powers = state.powers
    scale = powers.R.mean(axis=1)
    W, Y, P = linalg.scale_rows(state.W, state.Y, powers.P, scale)
    rescaled = PowerMatrices(
        U=powers.U,
        G=powers.G * scale[np.newaxis, : powers.n_coupled],
        R=powers.R / scale[:, np.newaxis],
        P=P,
        n_coupled=powers.n_coupled,
    )
    return replace(state, W=W, Y=Y, powers=rescaled)


def projection_back(
    demixed: Spectrogram, demixing: DemixingStack, channel: int = 0
) -> Spectrogram:
    """Restores each separated channel to its image at microphone `channel` (0-based)."""
    return demixed.with_data(linalg.projection_back(demixed.data, demixing.W, channel))


def initial_state(
    spec: Spectrogram, U: FloatArray, config: JointConfig, n_coupled: int
) -> JointState:
    """W = I, Y = X, R = P / F floored, G from the seeded gain initializer."""
    X = spec.data
    n_freq = spec.n_freq
    P = linalg.frame_power(X)
    epsilon = config.epsilon if config.epsilon is not None else variance_floor(P, n_freq)
    if epsilon <= 0:
        raise exceptions.InvalidJointStateError("Input spectrogram has no energy")
    rng = np.random.default_rng(config.seed)
    powers = PowerMatrices(
        U=np.asarray(U, dtype=np.float64),
        G=nmf.init_gains(U.shape[0], n_coupled, rng),
        R=np.maximum(P / n_freq, epsilon),
        P=P,
        n_coupled=n_coupled,
    )
    return JointState(
        W=DemixingStack.identity(n_freq, spec.n_channels).W,
        Y=X.copy(),
        powers=powers,
        epsilon=epsilon,
    )


def iterate(
    state: JointState, X: ComplexArray, nmf_sub_iter: int
) -> tuple[JointState, float]:
    """
    One outer iteration; returns the rescaled state and the IP normalization residual.
    """
    powers = state.powers
    n_freq = state.n_freq
    K = powers.n_coupled
    R = powers.R.copy()

    G, R[:K] = nmf.run_nmf(
        powers.U, powers.G, R[:K], powers.P_K, n_freq, nmf_sub_iter
    )
    R[K:] = update_uncoupled_variances(powers.P, K, n_freq, state.epsilon)

    W = state.W.copy()
    residual = linalg.iterative_projection(W, X, R, state.epsilon)
    Y = linalg.demix(W, X)
    updated = JointState(
        W=W,
        Y=Y,
        powers=PowerMatrices(
            U=powers.U, G=G, R=R, P=linalg.frame_power(Y), n_coupled=K
        ),
        epsilon=state.epsilon,
        cost_trace=state.cost_trace,
    )
    return rescale(updated), residual


def blinkiva_run(
    spec: Spectrogram, U: FloatArray | None, config: JointConfig
) -> SeparationResult:
    """
    Runs the joint algorithm for `config.n_iter` outer iterations.

    Args:
        spec: Microphone spectrogram with M channels and N frames.
        U: Blinky power, shape (B, N).
        config: Iteration counts, coupling rank K, variance floor and seed.

    Returns:
        SeparationResult whose target channels are 0..K-1 (the coupled rows).

    Raises:
        MissingBlinkyDataError: If no blinky data is given.
        FrameGeometryError: If U does not have one column per frame.
        ConfigurationError: If K exceeds the channel count.
        NumericalError: If an update meets a singular or degenerate state.
    """
    if U is None or U.size == 0:
        raise exceptions.MissingBlinkyDataError(
            "blinkiva needs blinky power measurements; provide them or use --algo auxiva"
        )
    if U.ndim != 2 or U.shape[1] != spec.n_frames:
        raise exceptions.FrameGeometryError(
            f"Blinky matrix must be (B, {spec.n_frames}), got {U.shape}"
        )
    n_coupled = config.resolve_coupling(spec.n_channels)
    X = spec.data

    logger.info(
        "Starting blinkiva",
        n_freq=spec.n_freq,
        n_frames=spec.n_frames,
        n_channels=spec.n_channels,
        n_blinkies=U.shape[0],
        n_coupled=n_coupled,
        n_iter=config.n_iter,
        nmf_sub_iter=config.nmf_sub_iter,
    )
    state = initial_state(spec, U, config, n_coupled)
    max_residual = 0.0
    for iteration in range(config.n_iter):
        try:
            state, residual = iterate(state, X, config.nmf_sub_iter)
        except exceptions.NumericalError as e:
            logger.error(f"blinkiva failed at iteration {iteration}: {e}")
            raise
        cost = cost_J(state)
        state.cost_trace.append(cost)
        max_residual = max(max_residual, residual)
        logger.debug(
            "blinkiva iteration", iteration=iteration, cost=cost, residual=residual
        )

    logger.info(
        "blinkiva finished",
        final_cost=state.cost_trace[-1] if state.cost_trace else None,
        max_normalization_error=max_residual,
    )
    return SeparationResult(
        algorithm=Algorithm.BLINKIVA,
        demixed=spec.with_data(state.Y),
        demixing=DemixingStack(W=state.W),
        channels=tuple(range(n_coupled)),
        variances=state.powers.R,
        cost_trace=list(state.cost_trace),
        gains=state.powers.G,
        max_normalization_error=max_residual,
    )


@final
class BlinkIVASeparator(Separator):
    algorithm = Algorithm.BLINKIVA

    def __init__(self, config: JointConfig):
        self.config = config

    @override
    def separate(
        self,
        spec: Spectrogram,
        n_sources: int,
        blinky_power: FloatArray | None = None,
    ) -> SeparationResult:
        """Couples `n_sources` channels to the blinkies unless the config fixes K."""
        config = self.config
        if config.n_coupled is None:
            config = replace(config, n_coupled=n_sources)
        return blinkiva_run(spec, blinky_power, config)
