"""Channel Gram matrix estimation from data observations, with PSD robustification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStatisticsError, InsufficientDataError, InvalidDimensionError
from .linalg import as_cmatrix, dft_matrix, fro_norm, hermitian_eig

__all__ = ["GramEstimate", "gram_nmse", "oracle_gram", "project_psd", "sample_gram", "to_angular_gram"]


@dataclass(frozen=True)
class GramEstimate:
    """Hermitian PSD estimate of H H^H in both spatial and angular coordinates."""

    r_spatial: np.ndarray
    r_angular: np.ndarray
    source: str  # "oracle" | "estimated"
    n_d_used: int
    shrinkage: float
    low_confidence: bool = False


def to_angular_gram(r_spatial: np.ndarray) -> np.ndarray:
    """Similarity transform Phi_{N_R} R Phi_{N_R}^H of a spatial Gram matrix."""
    r_spatial = as_cmatrix(r_spatial)
    phi = dft_matrix(r_spatial.shape[0])
    return phi @ r_spatial @ phi.conj().T


def project_psd(a: np.ndarray, shrinkage: float = 0.0) -> np.ndarray:
    """Symmetrize, clip negative eigenvalues at zero, optionally shrink toward (tr/N) I.

    Shrinkage mixes rho * (trace/N) I + (1 - rho) * clipped, preserving the trace.
    """
    a = as_cmatrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise InvalidDimensionError("projection needs a square matrix")
    if not (0.0 <= shrinkage <= 1.0):
        raise InvalidDimensionError("shrinkage must lie in [0, 1]")
    eig = hermitian_eig(a)
    w = np.maximum(eig.eigenvalues, 0.0)
    v = eig.eigenvectors
    clipped = (v * w) @ v.conj().T
    clipped = (clipped + clipped.conj().T) / 2.0
    if shrinkage > 0.0:
        tr = float(np.trace(clipped).real)
        clipped = shrinkage * (tr / n) * np.eye(n) + (1.0 - shrinkage) * clipped
    return clipped


def oracle_gram(h) -> GramEstimate:
    """Exact realization Gram matrix H H^H."""
    h = as_cmatrix(h)
    r = h @ h.conj().T
    r = (r + r.conj().T) / 2.0
    return GramEstimate(
        r_spatial=r,
        r_angular=to_angular_gram(r),
        source="oracle",
        n_d_used=0,
        shrinkage=0.0,
    )


def sample_gram(y_d, sigma2_d: float, n_d: int, shrinkage: float = 0.0) -> GramEstimate:
    """Bias-corrected, PSD-projected sample Gram matrix of the data observations.

    raw = (1/N_d) Y_d Y_d^H - sigma2_d I, then the PSD projection. If every
    eigenvalue clips to zero (heavy noise, tiny N_d) the zero matrix is
    returned flagged low-confidence so callers can drop Gram guidance.
    """
    y_d = as_cmatrix(y_d)
    if n_d < 1:
        raise InsufficientDataError("need at least one data observation")
    if y_d.shape[1] != n_d:
        raise InvalidDimensionError(f"y_d has {y_d.shape[1]} columns, expected n_d={n_d}")
    n_r = y_d.shape[0]
    raw = (y_d @ y_d.conj().T) / n_d - sigma2_d * np.eye(n_r)
    r = project_psd(raw, shrinkage=shrinkage)
    low_confidence = float(np.trace(r).real) <= 0.0
    if low_confidence:
        r = np.zeros_like(r)
    return GramEstimate(
        r_spatial=r,
        r_angular=to_angular_gram(r),
        source="estimated",
        n_d_used=int(n_d),
        shrinkage=float(shrinkage),
        low_confidence=low_confidence,
    )


def gram_nmse(est, truth) -> float:
    """Per-realization ||R_hat - R||_F^2 / ||R||_F^2."""
    r_est = est.r_spatial if isinstance(est, GramEstimate) else as_cmatrix(est)
    truth = as_cmatrix(truth)
    denom = fro_norm(truth) ** 2
    if denom == 0.0:
        raise DegenerateStatisticsError("reference Gram matrix has zero norm")
    return fro_norm(r_est - truth) ** 2 / denom
