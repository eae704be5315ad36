import numpy as np
import pytest

from gramdiff.errors import DegenerateStatisticsError, InsufficientDataError, InvalidDimensionError
from gramdiff.gram import gram_nmse, oracle_gram, project_psd, sample_gram, to_angular_gram
from gramdiff.linalg import crandn, dft_matrix, fro_norm, hermitian_eig


def test_oracle_gram_identity():
    ge = oracle_gram(np.eye(2, dtype=complex))
    assert np.allclose(ge.r_spatial, np.eye(2))
    assert ge.source == "oracle"


def test_oracle_gram_column():
    ge = oracle_gram(np.array([[1.0], [0.0]], dtype=complex))
    assert np.allclose(ge.r_spatial, [[1.0, 0.0], [0.0, 0.0]])


def test_oracle_gram_eigenvalues_are_squared_singular_values():
    rng = np.random.default_rng(0)
    h = crandn(rng, 5, 3)
    ge = oracle_gram(h)
    w = hermitian_eig(ge.r_spatial).eigenvalues
    sv = np.linalg.svd(h, compute_uv=False)
    assert np.allclose(w[:3], sv**2, atol=1e-9)
    assert np.allclose(w[3:], 0.0, atol=1e-9)


def test_gram_estimate_angular_similarity():
    rng = np.random.default_rng(1)
    ge = oracle_gram(crandn(rng, 6, 3))
    phi = dft_matrix(6)
    assert fro_norm(ge.r_angular - phi @ ge.r_spatial @ phi.conj().T) < 1e-9


def test_sample_gram_exact_with_orthogonal_data():
    # X_d with X_d X_d^H = N_d I makes the noiseless sample Gram exact
    rng = np.random.default_rng(2)
    n_t, n_d = 3, 12
    h = crandn(rng, 4, n_t)
    x_d = np.sqrt(n_d) * dft_matrix(n_d)[:n_t, :]
    assert np.max(np.abs(x_d @ x_d.conj().T - n_d * np.eye(n_t))) < 1e-9
    ge = sample_gram(h @ x_d, 0.0, n_d)
    assert fro_norm(ge.r_spatial - h @ h.conj().T) < 1e-10
    assert not ge.low_confidence


def test_sample_gram_zero_channel_shrinks():
    rng = np.random.default_rng(3)
    n_d = 10000
    y_d = crandn(rng, 4, n_d)  # pure CN(0,1) noise
    ge = sample_gram(y_d, 1.0, n_d)
    assert fro_norm(ge.r_spatial) < 0.2


def test_projection_clips_negative_eigenvalues():
    projected = project_psd(np.diag([1.0, -0.5]))
    assert np.allclose(projected, np.diag([1.0, 0.0]), atol=1e-12)


def test_projection_psd_always():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = crandn(rng, 5, 5)
        p = project_psd(a + a.conj().T)
        assert hermitian_eig(p).eigenvalues.min() >= -1e-9


def test_projection_shrinkage():
    a = np.diag([4.0, 0.0]).astype(complex)
    full = project_psd(a, shrinkage=1.0)
    assert np.allclose(full, 2.0 * np.eye(2))
    half = project_psd(a, shrinkage=0.5)
    assert abs(np.trace(half).real - 4.0) < 1e-12
    assert np.allclose(half, np.diag([3.0, 1.0]))


def test_sample_gram_low_confidence_zero_trace():
    # observations far below the assumed noise floor clip to the zero matrix
    rng = np.random.default_rng(5)
    y_d = 0.01 * crandn(rng, 3, 50)
    ge = sample_gram(y_d, 1.0, 50)
    assert ge.low_confidence
    assert np.all(ge.r_spatial == 0)


def test_sample_gram_argument_errors():
    with pytest.raises(InsufficientDataError):
        sample_gram(np.zeros((3, 0), dtype=complex), 0.1, 0)
    with pytest.raises(InvalidDimensionError):
        sample_gram(np.zeros((3, 5), dtype=complex), 0.1, 4)


def test_gram_nmse_trivials():
    r = np.diag([2.0, 1.0]).astype(complex)
    assert gram_nmse(r, r) == 0.0
    assert abs(gram_nmse(np.zeros_like(r), r) - 1.0) < 1e-15
    with pytest.raises(DegenerateStatisticsError):
        gram_nmse(r, np.zeros_like(r))


def test_gram_nmse_accepts_estimate_objects():
    rng = np.random.default_rng(6)
    h = crandn(rng, 4, 2)
    ge = oracle_gram(h)
    assert gram_nmse(ge, h @ h.conj().T) < 1e-24


def test_sample_gram_consistency_in_n_d():
    # error strictly decreasing over widening data blocks (5% slack per step)
    rng = np.random.default_rng(7)
    sigma2 = 0.1  # 10 dB
    means = []
    for n_d in (20, 200, 2000, 20000):
        vals = []
        for _ in range(500):
            h = crandn(rng, 4, 2)
            x_d = (rng.integers(0, 2, size=(2, n_d)) * 2 - 1 + 1j * (rng.integers(0, 2, size=(2, n_d)) * 2 - 1)) / np.sqrt(2)
            y_d = h @ x_d + np.sqrt(sigma2) * crandn(rng, 4, n_d)
            vals.append(gram_nmse(sample_gram(y_d, sigma2, n_d), h @ h.conj().T))
        means.append(np.mean(vals))
    for a, b in zip(means, means[1:]):
        assert b < a * 1.05


def test_sample_gram_close_to_oracle_at_default_model():
    # N_d = 2000 at 0 dB: mean Gram NMSE below the pinned 0.05 threshold
    from gramdiff.channels import default_gm_model, sample_gm_realization
    from gramdiff.linksim import make_data

    gm = default_gm_model(16, 4)
    rng = np.random.default_rng(8)
    vals = []
    for _ in range(500):
        h, _ = sample_gm_realization(gm, rng)
        x_d = make_data(4, 2000, "qpsk", rng)
        y_d = h @ x_d + crandn(rng, 16, 2000)
        vals.append(gram_nmse(sample_gram(y_d, 1.0, 2000), h @ h.conj().T))
    assert np.mean(vals) < 0.05
