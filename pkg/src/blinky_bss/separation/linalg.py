"""Per-frequency batch linear algebra shared by the IVA-type separators.

Spectra are laid out (F, N, M) and demixing stacks (F, M, M) throughout.
"""

import numpy as np

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import ComplexArray, FloatArray


def weighted_covariance(X: ComplexArray, weights: FloatArray) -> ComplexArray:
    """V_f = (1/N) sum_n weights[n] x_fn x_fn^H, shape (F, M, M)."""
    n_frames = X.shape[1]
    return (X.transpose(0, 2, 1) * weights[np.newaxis, np.newaxis, :]) @ X.conj() / n_frames


def ip_weights(r: FloatArray, epsilon: float) -> FloatArray:
    """IP weights 1 / (2 max(eps, r_n)) for one source."""
    return 1.0 / (2.0 * np.maximum(epsilon, r))


def quadratic_form(w: ComplexArray, V: ComplexArray) -> FloatArray:
    """Real part of w_f^H V_f w_f for every frequency."""
    return np.einsum("fi,fij,fj->f", w.conj(), V, w).real


def failing_frequency(WV: ComplexArray, solution: ComplexArray | None = None) -> int:
    """First bin with a non-finite solution, else the worst-conditioned bin of W_f V_f."""
    if solution is not None:
        bad = np.flatnonzero(~np.all(np.isfinite(solution), axis=1))
        if bad.size:
            return int(bad[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.linalg.cond(WV)
    return int(np.argmax(np.where(np.isfinite(condition), condition, np.inf)))


def ip_row(W: ComplexArray, V: ComplexArray, k: int) -> tuple[ComplexArray, float]:
    """
    Iterative-projection update of row k at every frequency.

    Solves (W_f V_f) w = e_k, normalizes so that w^H V_f w = 1 and writes
    conj(w) into row k of W in place.

    Returns:
        The updated w (F, M) and max |w^H V w - 1| after normalization.

    Raises:
        SingularUpdateError: If W_f V_f is singular or the normalizer is not positive.
    """
    n_freq, n_channels, _ = W.shape
    WV = W @ V
    rhs = np.zeros((n_freq, n_channels, 1), dtype=np.complex128)
    rhs[:, k, 0] = 1.0
    try:
        w = np.linalg.solve(WV, rhs)[..., 0]
    except np.linalg.LinAlgError as e:
        raise exceptions.SingularUpdateError(failing_frequency(WV), k) from e
    if not np.all(np.isfinite(w)):
        raise exceptions.SingularUpdateError(failing_frequency(WV, w), k)

    norm = quadratic_form(w, V)
    bad = np.flatnonzero(~(norm > 0))
    if bad.size:
        raise exceptions.SingularUpdateError(int(bad[0]), k)
    w = w / np.sqrt(norm)[:, np.newaxis]
    W[:, k, :] = w.conj()
    residual = float(np.max(np.abs(quadratic_form(w, V) - 1.0)))
    return w, residual


def iterative_projection(
    W: ComplexArray, X: ComplexArray, R: FloatArray, epsilon: float
) -> float:
    """
    One sweep of IP updates over all rows k with variances R held fixed.

    Updates W in place and returns the largest normalization residual.
    """
    residual = 0.0
    for k in range(W.shape[1]):
        V = weighted_covariance(X, ip_weights(R[k], epsilon))
        _, row_residual = ip_row(W, V, k)
        residual = max(residual, row_residual)
    return residual


def demix(W: ComplexArray, X: ComplexArray) -> ComplexArray:
    """y_fn = W_f x_fn for every (f, n), shape (F, N, M)."""
    return X @ W.transpose(0, 2, 1)


def frame_power(Y: ComplexArray) -> FloatArray:
    """||y_kn||^2 = sum_f |y_k[f, n]|^2, shape (M, N)."""
    return np.sum(Y.real**2 + Y.imag**2, axis=0).T.copy()


def scale_rows(
    W: ComplexArray, Y: ComplexArray, P: FloatArray, scale: FloatArray
) -> tuple[ComplexArray, ComplexArray, FloatArray]:
    """
    Divides output k by sqrt(scale[k]): W_f <- L^-1/2 W_f, Y <- Y L^-1/2, P <- L^-1 P.

    Raises:
        InvalidJointStateError: If a scale is not positive and finite.
    """
    if np.any(~(scale > 0)) or not np.all(np.isfinite(scale)):
        raise exceptions.InvalidJointStateError(
            f"Cannot rescale outputs with means {scale.tolist()}"
        )
    amplitude = np.sqrt(scale)
    return (
        W / amplitude[np.newaxis, :, np.newaxis],
        Y / amplitude[np.newaxis, np.newaxis, :],
        P / scale[:, np.newaxis],
    )


def log_abs_det(W: ComplexArray) -> FloatArray:
    _, logabsdet = np.linalg.slogdet(W)
    return np.asarray(logabsdet, dtype=np.float64)


def projection_back(Y: ComplexArray, W: ComplexArray, channel: int = 0) -> ComplexArray:
    """Scales y_k[f, .] by (W_f^-1)[channel, k], the source image at one microphone."""
    if not 0 <= channel < W.shape[1]:
        raise exceptions.ConfigurationError(
            f"Reference channel {channel} is outside 0..{W.shape[1] - 1}"
        )
    try:
        A = np.linalg.inv(W)
    except np.linalg.LinAlgError as e:
        raise exceptions.InvalidJointStateError(
            "Demixing matrix is singular; cannot project back"
        ) from e
    return Y * A[:, channel, np.newaxis, :]
