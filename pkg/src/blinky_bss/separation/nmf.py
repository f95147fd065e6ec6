"""
Itakura-Saito NMF updates for the blinky gains G and coupled variances R_K.

Minimizing the joint cost over (G, R_K) is the same as minimizing
D_IS(U~ | G~ R_K) with the stacked matrices

    U~ = (1/F) [U / 2; P_K],    G~ = [G; I_K],

so both updates are the usual multiplicative MM steps of IS-NMF with exponent 1/2.
Rows of G without any positive gain do not contribute a blinky term.
"""

import numpy as np

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import FloatArray

ENTRY_FLOOR = 1e-12


def floor_entries(A: FloatArray) -> FloatArray:
    """Clamps entries at ENTRY_FLOOR times the matrix mean."""
    return np.maximum(A, ENTRY_FLOOR * float(np.mean(A)))


def init_gains(n_blinkies: int, n_coupled: int, rng: np.random.Generator) -> FloatArray:
    """G entries i.i.d. uniform on [0.5, 1.5) / K."""
    return rng.uniform(0.5, 1.5, size=(n_blinkies, n_coupled)) / n_coupled


def stacked_matrices(
    U: FloatArray, P_K: FloatArray, G: FloatArray, n_freq: int
) -> tuple[FloatArray, FloatArray]:
    """Returns (U~, G~) of the stacked IS-NMF problem."""
    U_tilde = np.vstack((U / 2.0, P_K)) / n_freq
    G_tilde = np.vstack((G, np.eye(P_K.shape[0])))
    return U_tilde, G_tilde


def _require_positive(A: FloatArray, name: str) -> None:
    if not np.all(np.isfinite(A)) or np.any(A <= 0):
        raise exceptions.DegenerateNMFStateError(
            f"degenerate NMF state: {name} must be finite and strictly positive"
        )


def _require_nonnegative(A: FloatArray, name: str) -> None:
    if not np.all(np.isfinite(A)) or np.any(A < 0):
        raise exceptions.DegenerateNMFStateError(
            f"degenerate NMF state: {name} must be finite and non-negative"
        )


def _active_rows(G: FloatArray) -> np.ndarray:
    return np.any(G > 0, axis=1)


def _ratio(numerator: FloatArray, denominator: FloatArray) -> FloatArray:
    if np.any(denominator <= 0) or not np.all(np.isfinite(denominator)):
        raise exceptions.DegenerateNMFStateError(
            "degenerate NMF state: zero denominator in multiplicative update"
        )
    return numerator / denominator


def update_G(U: FloatArray, G: FloatArray, R_K: FloatArray, n_freq: int) -> FloatArray:
    """
    G <- G * sqrt( ((1/2F) U * (G R_K)^-2) R_K^T / ((G R_K)^-1 R_K^T) )

    Raises:
        DegenerateNMFStateError: On non-positive variances or a zero denominator.
    """
    _require_positive(R_K, "R_K")
    _require_nonnegative(U, "U")
    _require_nonnegative(G, "G")

    updated = G.copy()
    active = _active_rows(G)
    if not np.any(active):
        return updated
    G_a, U_a = G[active], U[active]
    model = G_a @ R_K
    numerator = (U_a / (2.0 * n_freq) / model**2) @ R_K.T
    denominator = (1.0 / model) @ R_K.T
    updated[active] = floor_entries(G_a * np.sqrt(_ratio(numerator, denominator)))
    return updated


def _blinky_terms(
    U: FloatArray, G: FloatArray, R_K: FloatArray, n_freq: int
) -> tuple[FloatArray, FloatArray]:
    """G^T((1/2F) U * (G R_K)^-2) and G^T (G R_K)^-1 over rows with positive gains."""
    active = _active_rows(G)
    if not np.any(active):
        return np.zeros_like(R_K), np.zeros_like(R_K)
    G_a, U_a = G[active], U[active]
    model = G_a @ R_K
    return G_a.T @ (U_a / (2.0 * n_freq) / model**2), G_a.T @ (1.0 / model)


def update_R_coupled(
    U: FloatArray, G: FloatArray, R_K: FloatArray, P_K: FloatArray, n_freq: int
) -> FloatArray:
    """
    R_K <- R_K * sqrt( ((1/F) P_K * R_K^-2 + G^T((1/2F) U * (G R_K)^-2))
                       / (R_K^-1 + G^T (G R_K)^-1) )

    With G = 0 this reduces to sqrt(R_K * P_K / F).

    Raises:
        DegenerateNMFStateError: On non-positive variances or a zero denominator.
    """
    _require_positive(R_K, "R_K")
    _require_nonnegative(U, "U")
    _require_nonnegative(G, "G")
    _require_nonnegative(P_K, "P_K")

    blinky_numerator, blinky_denominator = _blinky_terms(U, G, R_K, n_freq)
    numerator = P_K / n_freq / R_K**2 + blinky_numerator
    denominator = 1.0 / R_K + blinky_denominator
    return floor_entries(R_K * np.sqrt(_ratio(numerator, denominator)))


def update_R_coupled_listing(
    U: FloatArray, G: FloatArray, R_K: FloatArray, P_K: FloatArray, n_freq: int
) -> FloatArray:
    """Same update with the 1/F factors collected in the denominator."""
    _require_positive(R_K, "R_K")
    active = _active_rows(G)
    numerator = P_K / R_K**2
    denominator = 1.0 / R_K
    if np.any(active):
        G_a, U_a = G[active], U[active]
        model = G_a @ R_K
        numerator = numerator + G_a.T @ (0.5 * U_a / model**2)
        denominator = denominator + G_a.T @ (1.0 / model)
    return floor_entries(R_K * np.sqrt(_ratio(numerator, n_freq * denominator)))


def is_divergence(target: FloatArray, model: FloatArray) -> float:
    """sum_ij (t/v - log(t/v) - 1)."""
    _require_positive(target, "target")
    _require_positive(model, "model")
    ratio = target / model
    return float(np.sum(ratio - np.log(ratio) - 1.0))


def is_divergence_stacked(
    U: FloatArray, P_K: FloatArray, G: FloatArray, R_K: FloatArray, n_freq: int
) -> float:
    """D_IS(U~ | G~ R_K) of the stacked problem."""
    U_tilde, G_tilde = stacked_matrices(U, P_K, G, n_freq)
    return is_divergence(U_tilde, G_tilde @ R_K)


def run_nmf(
    U: FloatArray,
    G: FloatArray,
    R_K: FloatArray,
    P_K: FloatArray,
    n_freq: int,
    n_iter: int,
) -> tuple[FloatArray, FloatArray]:
    """Alternates R_K then G updates `n_iter` times; returns (G, R_K)."""
    for _ in range(n_iter):
        R_K = update_R_coupled(U, G, R_K, P_K, n_freq)
        G = update_G(U, G, R_K, n_freq)
    return G, R_K
