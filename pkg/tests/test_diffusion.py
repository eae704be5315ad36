import numpy as np
import pytest

from gramdiff.channels import GMChannelModel
from gramdiff.diffusion import (
    AnalyticGMDenoiser,
    NoiseSchedule,
    ddim_step,
    forward_diffuse,
    make_schedule,
    match_t,
    tweedie,
)
from gramdiff.errors import ConfigError, PreconditionError
from gramdiff.linalg import crandn


class ZeroBackend:
    def epsilon(self, ht, t, schedule):
        return np.zeros_like(ht)


def gaussian_model(c=1.0, n_r=2, n_t=2):
    n = n_r * n_t
    return GMChannelModel(n_r=n_r, n_t=n_t, weights=np.array([1.0]), variances=np.full((1, n), c))


def schedule_from_betas(betas):
    beta = np.asarray(betas, dtype=float)
    alpha = 1.0 - beta
    abar = np.cumprod(alpha)
    return NoiseSchedule(
        t_max=beta.size,
        beta=beta,
        alpha=alpha,
        alpha_bar=abar,
        snr_dm=abar / (1 - abar),
        kind="linear",
        beta_start=float(beta[0]),
        beta_end=float(beta[-1]),
    )


def test_make_schedule_t1():
    s = make_schedule(1, 0.1, 0.1)
    assert np.allclose(s.alpha_bar, [0.9])
    assert np.allclose(s.snr_dm, [9.0])


def test_make_schedule_t2_product():
    s = schedule_from_betas([0.1, 0.2])
    assert np.allclose(s.alpha_bar, [0.9, 0.72])


def test_make_schedule_linear_snr_decreasing():
    s = make_schedule(100, 1e-4, 0.02)
    assert np.all(np.diff(s.snr_dm) < 0)
    assert np.all(np.diff(s.alpha_bar) < 0)
    assert np.all((s.beta > 0) & (s.beta <= 0.999))
    assert np.max(np.abs(s.alpha_bar - np.cumprod(1.0 - s.beta))) < 1e-12


def test_make_schedule_cosine_valid():
    s = make_schedule(50, 1e-4, 0.02, kind="cosine")
    assert np.all(np.diff(s.snr_dm) < 0)
    assert np.all((s.beta > 0) & (s.beta <= 0.999))


def test_make_schedule_invalid():
    with pytest.raises(ConfigError):
        make_schedule(0)
    with pytest.raises(ConfigError):
        make_schedule(10, 0.0, 0.02)
    with pytest.raises(ConfigError):
        make_schedule(10, 0.02, 1e-4)
    with pytest.raises(ConfigError):
        make_schedule(10, kind="quadratic")


def test_match_t_examples():
    snr = np.array([100.0, 10.0, 1.0, 0.1])
    abar = snr / (1 + snr)
    sched = NoiseSchedule(
        t_max=4, beta=np.zeros(4), alpha=np.zeros(4), alpha_bar=abar, snr_dm=snr,
        kind="linear", beta_start=1e-4, beta_end=0.02,
    )
    assert match_t(8.0, sched) == 2
    assert match_t(10.0, sched) == 2
    assert match_t(0.01, sched) == 4  # below the grid: clamp at T
    with pytest.raises(PreconditionError):
        match_t(0.0, sched)


def test_match_t_tie_breaks_to_smaller_t():
    snr = np.array([4.0, 2.0])
    sched = NoiseSchedule(
        t_max=2, beta=np.zeros(2), alpha=np.zeros(2), alpha_bar=snr / (1 + snr), snr_dm=snr,
        kind="linear", beta_start=1e-4, beta_end=0.02,
    )
    assert match_t(3.0, sched) == 1


def test_match_t_db_scale_mode():
    snr = np.array([100.0, 0.01])
    sched = NoiseSchedule(
        t_max=2, beta=np.zeros(2), alpha=np.zeros(2), alpha_bar=snr / (1 + snr), snr_dm=snr,
        kind="linear", beta_start=1e-4, beta_end=0.02,
    )
    # raw matching is dominated by the small endpoint; dB matching is not
    assert match_t(2.0, sched) == 2
    assert match_t(2.0, sched, db_scale=True) == 1


def test_tweedie_single_gaussian_quarter_alpha():
    # abar = 0.25, unit prior: T = sqrt(0.25) * 2 = 1
    sched = schedule_from_betas([0.75])
    backend = AnalyticGMDenoiser(gaussian_model(n_r=1, n_t=1))
    out = tweedie(np.array([[2.0 + 0j]]), 1, sched, backend)
    assert abs(out[0, 0] - 1.0) < 1e-12


def test_tweedie_zero_backend():
    sched = schedule_from_betas([0.1, 0.2])
    rng = np.random.default_rng(0)
    ht = crandn(rng, 3, 2)
    out = tweedie(ht, 2, sched, ZeroBackend())
    assert np.max(np.abs(out - ht / np.sqrt(sched.alpha_bar_at(2)))) < 1e-12


def _real_embed(v):
    return np.concatenate([v.real, v.imag])


def test_tweedie_matches_dense_mixture_posterior_oracle():
    # independent oracle: dense real-coordinate Gaussian mixture posterior mean
    n_r = n_t = 2
    n = n_r * n_t
    rng = np.random.default_rng(1)
    c = np.stack([rng.uniform(0.2, 2.0, size=n), rng.uniform(0.2, 2.0, size=n)])
    w = np.array([0.3, 0.7])
    model = GMChannelModel(n_r=n_r, n_t=n_t, weights=w, variances=c)
    sched = make_schedule(10, 0.05, 0.3)
    t = 6
    a = sched.alpha_bar_at(t)
    ht = crandn(rng, n_r, n_t)
    y = _real_embed(ht.ravel())

    post_num = np.zeros(2 * n)
    weights = []
    for k in range(2):
        # marginal covariance of [re; im] of h_t under component k
        marg = np.diag(np.concatenate([(a * c[k] + 1 - a) / 2.0] * 2))
        cross = np.diag(np.concatenate([np.sqrt(a) * c[k] / 2.0] * 2))
        sign, logdet = np.linalg.slogdet(2 * np.pi * marg)
        ll = -0.5 * (y @ np.linalg.solve(marg, y)) - 0.5 * logdet
        weights.append(np.log(w[k]) + ll)
        post_num = post_num  # conditional means combined after responsibilities
    weights = np.array(weights)
    resp = np.exp(weights - weights.max())
    resp /= resp.sum()
    mean = np.zeros(2 * n)
    for k in range(2):
        marg = np.diag(np.concatenate([(a * c[k] + 1 - a) / 2.0] * 2))
        cross = np.diag(np.concatenate([np.sqrt(a) * c[k] / 2.0] * 2))
        mean += resp[k] * (cross @ np.linalg.solve(marg, y))
    oracle = (mean[:n] + 1j * mean[n:]).reshape(n_r, n_t)

    got = tweedie(ht, t, sched, AnalyticGMDenoiser(model))
    assert np.max(np.abs(got - oracle)) < 1e-8


def test_ddim_step_t1_returns_tweedie():
    sched = schedule_from_betas([0.3])
    backend = AnalyticGMDenoiser(gaussian_model(c=1.7, n_r=2, n_t=2))
    rng = np.random.default_rng(2)
    ht = crandn(rng, 2, 2)
    out = ddim_step(ht, 1, sched, backend)
    ref = tweedie(ht, 1, sched, backend)
    assert np.max(np.abs(out - ref)) < 1e-12


def test_ddim_step_zero_backend_rescales():
    sched = schedule_from_betas([0.1, 0.2, 0.15])
    rng = np.random.default_rng(3)
    ht = crandn(rng, 3, 2)
    out = ddim_step(ht, 3, sched, ZeroBackend())
    factor = np.sqrt(sched.alpha_bar_at(2) / sched.alpha_bar_at(3))
    assert np.max(np.abs(out - factor * ht)) < 1e-12


@pytest.mark.parametrize("c", [1.0, 2.5, 0.4])
def test_ddim_step_preserves_tweedie_fixed_point(c):
    # algebraic invariant of the deterministic reverse step with a Gaussian prior
    sched = make_schedule(40, 1e-3, 0.05)
    backend = AnalyticGMDenoiser(gaussian_model(c=c, n_r=2, n_t=2))
    rng = np.random.default_rng(4)
    for t in (40, 17, 2):
        ht = crandn(rng, 2, 2)
        before = tweedie(ht, t, sched, backend)
        after = tweedie(ddim_step(ht, t, sched, backend), t - 1, sched, backend) if t > 1 else ddim_step(ht, t, sched, backend)
        assert np.max(np.abs(after - before)) < 1e-9


def test_forward_diffuse_alpha_one_limit():
    sched = schedule_from_betas([1e-9])
    rng = np.random.default_rng(5)
    h0 = crandn(rng, 4, 2)
    out = forward_diffuse(h0, 1, sched, np.random.default_rng(0))
    assert np.max(np.abs(out - h0)) < 1e-3


def test_forward_diffuse_variance_preservation():
    sched = make_schedule(100)
    rng = np.random.default_rng(6)
    t = 60
    samples = []
    for _ in range(10000):
        h0 = crandn(rng, 2, 2)  # unit-variance prior
        samples.append(forward_diffuse(h0, t, sched, rng))
    var = np.mean(np.abs(np.stack(samples)) ** 2)
    assert 0.95 < var < 1.05


def test_forward_diffuse_deterministic():
    sched = make_schedule(10)
    h0 = np.ones((2, 2), dtype=complex)
    a = forward_diffuse(h0, 5, sched, np.random.default_rng(1))
    b = forward_diffuse(h0, 5, sched, np.random.default_rng(1))
    assert np.array_equal(a, b)


def test_epsilon_tweedie_duality():
    sched = make_schedule(30)
    model = GMChannelModel(
        n_r=2, n_t=2, weights=np.array([0.5, 0.5]),
        variances=np.stack([np.full(4, 0.5), np.full(4, 1.5)]),
    )
    backend = AnalyticGMDenoiser(model)
    rng = np.random.default_rng(7)
    for t in (1, 15, 30):
        ht = crandn(rng, 2, 2)
        eps = backend.epsilon(ht, t, sched)
        tw = tweedie(ht, t, sched, backend)
        a = sched.alpha_bar_at(t)
        recon = (ht - np.sqrt(a) * tw) / np.sqrt(1 - a)
        assert np.max(np.abs(recon - eps)) < 1e-10


def test_analytic_denoiser_unit_component_exact():
    sched = make_schedule(25)
    backend = AnalyticGMDenoiser(gaussian_model(c=1.0, n_r=3, n_t=2))
    rng = np.random.default_rng(8)
    ht = crandn(rng, 3, 2)
    for t in (1, 12, 25):
        a = sched.alpha_bar_at(t)
        tw = tweedie(ht, t, sched, backend)
        assert np.max(np.abs(tw - np.sqrt(a) * ht)) < 1e-12


def test_step_index_bounds():
    sched = make_schedule(5)
    backend = ZeroBackend()
    with pytest.raises(PreconditionError):
        ddim_step(np.zeros((1, 1), dtype=complex), 6, sched, backend)
    with pytest.raises(PreconditionError):
        tweedie(np.zeros((1, 1), dtype=complex), 0, sched, backend)
