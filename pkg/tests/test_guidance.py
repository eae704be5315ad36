import math

import numpy as np
import pytest

from gramdiff.diffusion import make_schedule
from gramdiff.errors import ConfigError, DegenerateNoiseError, InvalidDimensionError
from gramdiff.guidance import (
    GuidanceConfig,
    clip_update,
    gate,
    gram_guidance,
    gram_strength_multiplier,
    lambda_gram_at,
    lambda_like_at,
    likelihood_guidance,
)
from gramdiff.linalg import crandn, fro_norm


def test_likelihood_guidance_scalar_example():
    out = likelihood_guidance([[1.0 + 0j]], [[0.6 + 0j]], 0.5)
    assert abs(out[0, 0] - 0.8) < 1e-12


def test_likelihood_guidance_zero_residual():
    y = np.ones((2, 2), dtype=complex)
    assert np.all(likelihood_guidance(y, y, 0.3) == 0)


def test_likelihood_guidance_elementwise_oracle():
    rng = np.random.default_rng(0)
    y = crandn(rng, 4, 4)
    x = crandn(rng, 4, 4)
    sigma2 = 0.7
    got = likelihood_guidance(y, x, sigma2)
    for i in range(4):
        for j in range(4):
            assert abs(got[i, j] - (y[i, j] - x[i, j]) / sigma2) < 1e-12


def test_likelihood_guidance_errors():
    with pytest.raises(DegenerateNoiseError):
        likelihood_guidance(np.ones((1, 1)), np.ones((1, 1)), 0.0)
    with pytest.raises(InvalidDimensionError):
        likelihood_guidance(np.ones((2, 2)), np.ones((2, 3)), 0.1)


def test_gram_guidance_scalar_example():
    out = gram_guidance([[1.0 + 0j]], [[2.0 + 0j]])
    assert abs(out[0, 0] - 4.0) < 1e-12


def test_gram_guidance_zero_state():
    r = np.diag([1.0, 2.0]).astype(complex)
    assert np.all(gram_guidance(np.zeros((2, 3), dtype=complex), r) == 0)


def test_gram_guidance_finite_difference():
    # flagship check: gradient of -||H H^H - R||_F^2 over real coordinates
    rng = np.random.default_rng(1)
    for _ in range(5):
        ht = crandn(rng, 3, 2)
        b = crandn(rng, 3, 3)
        r = b @ b.conj().T

        def f(m):
            d = m @ m.conj().T - r
            return -float(np.sum(np.abs(d) ** 2))

        g = gram_guidance(ht, r)
        step = 1e-5
        fd = np.zeros_like(g)
        for i in range(3):
            for j in range(2):
                for part in (1.0, 1.0j):
                    e = np.zeros_like(ht)
                    e[i, j] = part * step
                    diff = (f(ht + e) - f(ht - e)) / (2 * step)
                    fd[i, j] += diff * part
        assert fro_norm(fd - g) / fro_norm(g) < 1e-5


def test_gram_guidance_dimension_mismatch():
    with pytest.raises(InvalidDimensionError):
        gram_guidance(np.zeros((3, 2), dtype=complex), np.zeros((2, 2), dtype=complex))


def test_gate_midpoint():
    assert abs(gate(0.5, 0.5, 0.1) - 0.5) < 1e-15


def test_gate_one_delta_above():
    assert abs(gate(0.6, 0.5, 0.1) - 1.0 / (1.0 + math.exp(-1.0))) < 1e-12


def test_gate_limits_and_monotonicity():
    assert gate(1e12, 0.0, 1.0) == pytest.approx(1.0)
    xs = np.linspace(-5, 5, 41)
    vals = [gate(x, 0.0, 0.7) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v < 1.0 for v in vals)


def test_gate_symmetry():
    for x in (0.1, 1.0, 3.7):
        assert abs(gate(2.0 + x, 2.0, 0.5) + gate(2.0 - x, 2.0, 0.5) - 1.0) < 1e-12


def test_gate_bad_delta():
    with pytest.raises(ConfigError):
        gate(1.0, 0.0, 0.0)


def test_lambda_like_at():
    sched = make_schedule(10, 0.01, 0.01)
    off = GuidanceConfig(lambda_like=0.0, lambda_gram=0.0)
    assert lambda_like_at(3, sched, off, snr_obs=1.0) == 0.0
    ungated = GuidanceConfig(lambda_like=2.0, gating_enabled=False)
    assert abs(lambda_like_at(3, sched, ungated, snr_obs=1.0) - 0.02) < 1e-15
    gated = GuidanceConfig(lambda_like=2.0, gating_enabled=True)
    at_mid = lambda_like_at(3, sched, gated, snr_obs=gated.snr0)
    assert abs(at_mid - 0.01) < 1e-15  # half the ungated value


def test_lambda_gram_at():
    sched = make_schedule(5, 0.04, 0.04)
    cfg = GuidanceConfig(lambda_gram=1.0)
    assert abs(lambda_gram_at(2, sched, cfg) - 0.2) < 1e-15
    assert lambda_gram_at(2, sched, GuidanceConfig(lambda_gram=0.0)) == 0.0
    rising = make_schedule(5, 0.01, 0.04)
    vals = [lambda_gram_at(t, rising, cfg) for t in range(1, 6)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_clip_update_saturates():
    dx = np.zeros((2, 2), dtype=complex)
    dx[0, 0] = 10.0
    out = clip_update(dx, 2.0, 1e-12)
    assert abs(fro_norm(out) - 2.0) < 1e-9


def test_clip_update_zero():
    assert np.all(clip_update(np.zeros((2, 2)), 2.0, 1e-12) == 0)


def test_clip_update_passthrough():
    dx = np.zeros((2, 2), dtype=complex)
    dx[0, 1] = 1.0
    out = clip_update(dx, 2.0, 1e-12)
    assert np.array_equal(out, dx)


def test_clip_update_direction_preserved():
    rng = np.random.default_rng(2)
    for th in (0.1, 1.0, 10.0):
        dx = crandn(rng, 3, 3)
        out = clip_update(dx, th, 1e-8)
        c = fro_norm(out) / fro_norm(dx)
        assert 0.0 < c <= 1.0
        assert fro_norm(out - c * dx) < 1e-12 * fro_norm(dx)
        assert fro_norm(out) <= fro_norm(dx) + 1e-15


def test_clip_update_bad_params():
    with pytest.raises(ConfigError):
        clip_update(np.ones((1, 1)), 0.0, 1e-8)
    with pytest.raises(ConfigError):
        clip_update(np.ones((1, 1)), 1.0, 0.0)


def test_gram_strength_multiplier_table():
    cfg = GuidanceConfig()
    assert gram_strength_multiplier(cfg, 5) == 0.1
    assert gram_strength_multiplier(cfg, 19) == 0.1
    assert gram_strength_multiplier(cfg, 20) == 0.3
    assert gram_strength_multiplier(cfg, 199) == 0.3
    assert gram_strength_multiplier(cfg, 200) == 1.0
    assert gram_strength_multiplier(cfg, 20000) == 1.0


def test_guidance_config_validation():
    with pytest.raises(ConfigError):
        GuidanceConfig(lambda_like=-0.1)
    with pytest.raises(ConfigError):
        GuidanceConfig(delta_db=0.0)
    with pytest.raises(ConfigError):
        GuidanceConfig(clip_threshold=0.0)
    with pytest.raises(ConfigError):
        GuidanceConfig(nd_breaks=(20,), nd_multipliers=(0.1,))


def test_guidance_config_db_conversion():
    cfg = GuidanceConfig(snr0_db=-10.0, delta_db=2.0)
    assert abs(cfg.snr0 - 0.1) < 1e-15
    assert abs(cfg.delta - 0.1 * (10 ** 0.2 - 1.0)) < 1e-15
