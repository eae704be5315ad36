"""Pilot decorrelation and the normalized additive-noise angular observation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .linalg import as_cmatrix, dft2

__all__ = ["AngularObservation", "decorrelate", "to_angular_observation"]


@dataclass(frozen=True)
class AngularObservation:
    """Angular-domain pilot observation scaled to unit marginal variance.

    y_tilde = dft2(Y_p X_p^H) / sqrt(1 + sigma2); the unnormalized observation
    (channel plus CN(0, sigma2) noise) is recovered as y_tilde / scale.
    """

    y_tilde: np.ndarray
    sigma2: float
    snr: float
    scale: float

    @property
    def y_tilde_raw(self) -> np.ndarray:
        return self.y_tilde / self.scale


def decorrelate(y_p, x_p) -> np.ndarray:
    """Right-multiply by X_p^H, reducing the pilot block to channel plus noise.

    Only unitary pilots are supported; the general pseudo-inverse form for
    non-orthogonal pilots is intentionally not implemented.
    """
    y_p = as_cmatrix(y_p)
    x_p = as_cmatrix(x_p)
    n = x_p.shape[0]
    if x_p.shape[1] != n:
        raise PreconditionError(f"pilot matrix must be square, got {x_p.shape}")
    gram = x_p @ x_p.conj().T
    if np.max(np.abs(gram - np.eye(n))) > 1e-8:
        raise PreconditionError("pilot matrix is not unitary within 1e-8")
    return y_p @ x_p.conj().T


def to_angular_observation(y_p, x_p, sigma2: float) -> AngularObservation:
    """Decorrelate, transform to the angular domain, and normalize to unit variance."""
    if sigma2 < 0:
        raise PreconditionError("sigma2 must be >= 0")
    scale = 1.0 / np.sqrt(1.0 + sigma2)
    y_tilde = dft2(decorrelate(y_p, x_p)) * scale
    snr = np.inf if sigma2 == 0 else 1.0 / sigma2
    return AngularObservation(y_tilde=y_tilde, sigma2=float(sigma2), snr=float(snr), scale=float(scale))
