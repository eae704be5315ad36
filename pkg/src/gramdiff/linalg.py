"""Complex dense linear algebra: unitary DFTs, Hermitian eigendecomposition, norms.

All matrices are 2-D ``numpy.ndarray`` of dtype complex128, row-major. Sizes
stay small (<= 64 per axis), so the 2-D DFT is computed by explicit multiplies
with a cached unitary DFT matrix rather than an FFT.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, InvalidDimensionError

__all__ = [
    "HermitianEig",
    "adjoint",
    "as_cmatrix",
    "crandn",
    "dft2",
    "dft_matrix",
    "fro_norm",
    "hermitian_eig",
    "idft2",
    "matmul",
]


def as_cmatrix(a) -> np.ndarray:
    """Coerce input to a 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise InvalidDimensionError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Circular complex Gaussian with unit variance per complex entry (E|z|^2 = 1)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@lru_cache(maxsize=None)
def _dft_matrix_cached(n: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    phi = np.exp(-2j * np.pi * j * k / n) / np.sqrt(n)
    phi.setflags(write=False)
    return phi


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n-point DFT matrix, entries exp(-2*pi*i*j*k/n)/sqrt(n).

    The matrix is symmetric (entry depends only on j*k), so transposition is a
    no-op; callers rely on this below.
    """
    if n < 1:
        raise InvalidDimensionError(f"DFT size must be >= 1, got {n}")
    return _dft_matrix_cached(int(n))


def dft2(h) -> np.ndarray:
    """2-D unitary DFT mapping a spatial matrix to the angular domain."""
    h = as_cmatrix(h)
    nr, nt = h.shape
    # Phi is symmetric, so right-multiplying by Phi_nt equals Phi_nt^T.
    return dft_matrix(nr) @ h @ dft_matrix(nt)


def idft2(ht) -> np.ndarray:
    """Inverse of :func:`dft2` (conjugate transpose on the left, conjugate on the right)."""
    ht = as_cmatrix(ht)
    nr, nt = ht.shape
    return dft_matrix(nr).conj().T @ ht @ dft_matrix(nt).conj()


def fro_norm(a) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(a)))


def adjoint(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_cmatrix(a).conj().T


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[1] != b.shape[0]:
        raise InvalidDimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` sorted descending; ``eigenvectors`` holds the matching
    unit-norm eigenvectors as columns, so V @ diag(w) @ V^H reconstructs the
    input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _phase_normalize(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate a vector so its first entry of non-negligible magnitude is real positive."""
    for x in v:
        if abs(x) > tol:
            return v * (x.conj() / abs(x))
    return v


def hermitian_eig(a) -> HermitianEig:
    """Eigendecomposition of a (near-)Hermitian matrix.

    The input is symmetrized as (A + A^H)/2 before factorization. Within a
    degenerate eigenvalue cluster, eigenvectors are phase-normalized (first
    non-zero entry real positive) and ordered lexicographically by their
    (re, im) coordinates so the output is deterministic.
    """
    a = as_cmatrix(a)
    n, m = a.shape
    if n != m:
        raise InvalidDimensionError(f"eigendecomposition needs a square matrix, got {a.shape}")
    sym = (a + a.conj().T) / 2.0
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Hermitian eigendecomposition failed: {exc}") from exc
    # eigh returns ascending order
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    for i in range(n):
        v[:, i] = _phase_normalize(v[:, i])
    # deterministic ordering inside degenerate clusters
    scale = max(1.0, float(np.max(np.abs(w))) if n else 1.0)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(w[j] - w[i]) <= 1e-9 * scale:
            j += 1
        if j - i > 1:
            cols = sorted(range(i, j), key=lambda c: tuple(np.stack([v[:, c].real, v[:, c].imag], axis=1).ravel()))
            v[:, i:j] = v[:, cols]
        i = j
    w.setflags(write=False)
    v.setflags(write=False)
    return HermitianEig(eigenvalues=w, eigenvectors=v)
