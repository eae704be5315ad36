"""Frame synthesis: pilots, data symbols, and the noisy linear observation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidDimensionError
from .linalg import as_cmatrix, crandn, dft_matrix

__all__ = [
    "CONSTELLATIONS",
    "Frame",
    "make_data",
    "make_pilots",
    "sigma2_to_snr_db",
    "snr_db_to_sigma2",
    "transmit",
]

_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
_16QAM = np.array([a + 1j * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]) / np.sqrt(10.0)

CONSTELLATIONS = {"qpsk": _QPSK, "16qam": _16QAM}


def snr_db_to_sigma2(snr_db: float) -> float:
    """Per-component noise variance for unit signal variance."""
    return float(10.0 ** (-snr_db / 10.0))


def sigma2_to_snr_db(sigma2: float) -> float:
    return float(-10.0 * np.log10(sigma2))


@dataclass(frozen=True)
class Frame:
    """One coherence interval: pilots, data symbols, and their noisy observations."""

    x_p: np.ndarray
    x_d: np.ndarray
    y_p: np.ndarray
    y_d: np.ndarray
    sigma2: float
    sigma2_d: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be >= 0")
        if self.sigma2_d is None:
            object.__setattr__(self, "sigma2_d", self.sigma2)

    @property
    def n_d(self) -> int:
        return self.x_d.shape[1]


def make_pilots(n_t: int, kind: str = "dft") -> np.ndarray:
    """Unitary pilot matrix (X_p X_p^H = I), N_p = N_T columns."""
    if n_t < 1:
        raise InvalidDimensionError("n_t must be >= 1")
    if kind == "dft":
        return dft_matrix(n_t).copy()
    if kind == "identity":
        return np.eye(n_t, dtype=np.complex128)
    raise ConfigError(f"unknown pilot kind: {kind!r}")


def make_data(n_t: int, n_d: int, constellation: str = "qpsk", rng: np.random.Generator | None = None) -> np.ndarray:
    """i.i.d. uniform unit-energy constellation symbols, shape (n_t, n_d)."""
    if n_d < 0:
        raise InvalidDimensionError("n_d must be >= 0")
    try:
        points = CONSTELLATIONS[constellation]
    except KeyError:
        raise ConfigError(f"unknown constellation: {constellation!r}") from None
    if n_d == 0:
        return np.zeros((n_t, 0), dtype=np.complex128)
    if rng is None:
        rng = np.random.default_rng()
    return points[rng.integers(0, points.size, size=(n_t, n_d))]


def transmit(h, x_p, x_d, sigma2: float, rng: np.random.Generator, sigma2_d: float | None = None) -> Frame:
    """Pass pilots and data through the channel, adding CN(0, sigma2) noise per entry."""
    h = as_cmatrix(h)
    x_p = as_cmatrix(x_p)
    x_d = as_cmatrix(x_d)
    if h.shape[1] != x_p.shape[0] or h.shape[1] != x_d.shape[0]:
        raise InvalidDimensionError(
            f"channel {h.shape} incompatible with pilots {x_p.shape} / data {x_d.shape}"
        )
    if sigma2 < 0:
        raise ConfigError("sigma2 must be >= 0")
    sd = sigma2 if sigma2_d is None else sigma2_d
    y_p = h @ x_p + np.sqrt(sigma2) * crandn(rng, h.shape[0], x_p.shape[1])
    y_d = h @ x_d + np.sqrt(sd) * crandn(rng, h.shape[0], x_d.shape[1])
    return Frame(x_p=x_p, x_d=x_d, y_p=y_p, y_d=y_d, sigma2=float(sigma2), sigma2_d=float(sd))
