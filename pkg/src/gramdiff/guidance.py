"""First- and second-order guidance terms, their schedules, gating, and clipping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import NoiseSchedule
from .errors import ConfigError, DegenerateNoiseError, InvalidDimensionError
from .linalg import as_cmatrix

__all__ = [
    "GuidanceConfig",
    "clip_update",
    "gate",
    "gram_guidance",
    "gram_strength_multiplier",
    "lambda_gram_at",
    "lambda_like_at",
    "likelihood_guidance",
]


@dataclass(frozen=True)
class GuidanceConfig:
    """Guidance scales and safeguards.

    Gating thresholds are stated in dB and converted to raw SNR internally:
    snr0_raw = 10^(snr0_db/10) and delta_raw is the raw-SNR increment of a
    delta_db step above snr0. The small-N_d multipliers damp Gram guidance
    when the sample Gram estimate is built from few observations.
    """

    lambda_like: float = 0.1
    lambda_gram: float = 0.5
    snr0_db: float = -10.0
    delta_db: float = 2.0
    gating_enabled: bool = False
    clip_threshold: float = 1.0
    clip_epsilon: float = 1e-8
    nd_breaks: tuple = (20, 200)
    nd_multipliers: tuple = (0.1, 0.3, 1.0)

    def __post_init__(self):
        if self.lambda_like < 0 or self.lambda_gram < 0:
            raise ConfigError("guidance scales must be >= 0")
        if self.delta_db <= 0:
            raise ConfigError("delta_db must be positive")
        if self.clip_threshold <= 0 or self.clip_epsilon <= 0:
            raise ConfigError("clip threshold and epsilon must be positive")
        if len(self.nd_multipliers) != len(self.nd_breaks) + 1:
            raise ConfigError("need one multiplier per N_d range")

    @property
    def snr0(self) -> float:
        return 10.0 ** (self.snr0_db / 10.0)

    @property
    def delta(self) -> float:
        return self.snr0 * (10.0 ** (self.delta_db / 10.0) - 1.0)


def likelihood_guidance(y_tilde_obs, tweedie_est, sigma2: float) -> np.ndarray:
    """Residual toward the observation scaled by 1/sigma2: (Y - T(H_t)) / sigma2."""
    if sigma2 <= 0:
        raise DegenerateNoiseError("likelihood guidance undefined for sigma2 <= 0; bypass diffusion instead")
    y = as_cmatrix(y_tilde_obs)
    t = as_cmatrix(tweedie_est)
    if y.shape != t.shape:
        raise InvalidDimensionError(f"shape mismatch {y.shape} vs {t.shape}")
    return (y - t) / sigma2


def gram_guidance(ht, r_angular) -> np.ndarray:
    """Gradient 4 (R_hat - H_t H_t^H) H_t of -||H_t H_t^H - R_hat||_F^2.

    The gradient is taken with respect to the real and imaginary parts of H_t.
    """
    ht = as_cmatrix(ht)
    r = as_cmatrix(r_angular)
    n_r = ht.shape[0]
    if r.shape != (n_r, n_r):
        raise InvalidDimensionError(f"Gram estimate shape {r.shape} != ({n_r}, {n_r})")
    return 4.0 * (r - ht @ ht.conj().T) @ ht


def gate(snr_obs: float, snr0: float, delta: float) -> float:
    """Logistic weight 1/(1 + exp(-(snr - snr0)/delta)), strictly increasing."""
    if delta <= 0:
        raise ConfigError("delta must be positive")
    x = (snr_obs - snr0) / delta
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-min(x, 700.0)))
    return math.exp(max(x, -700.0)) / (1.0 + math.exp(max(x, -700.0)))


def lambda_like_at(t: int, schedule: NoiseSchedule, cfg: GuidanceConfig, snr_obs: float) -> float:
    """Per-step likelihood scale lambda_like * beta_t, optionally SNR-gated."""
    w = gate(snr_obs, cfg.snr0, cfg.delta) if cfg.gating_enabled else 1.0
    return cfg.lambda_like * schedule.beta_at(t) * w


def lambda_gram_at(t: int, schedule: NoiseSchedule, cfg: GuidanceConfig) -> float:
    """Per-step Gram scale lambda_gram * sqrt(beta_t) (sublinear in the step size)."""
    return cfg.lambda_gram * math.sqrt(schedule.beta_at(t))


def gram_strength_multiplier(cfg: GuidanceConfig, n_d: int) -> float:
    """Damping of the Gram scale for small data-block lengths."""
    for brk, mult in zip(cfg.nd_breaks, cfg.nd_multipliers):
        if n_d < brk:
            return mult
    return cfg.nd_multipliers[-1]


def clip_update(delta_x, th: float, eps: float) -> np.ndarray:
    """Norm clipping delta_x * min(1, th / (||delta_x||_F + eps)); direction preserved."""
    if th <= 0 or eps <= 0:
        raise ConfigError("clip threshold and epsilon must be positive")
    dx = as_cmatrix(delta_x)
    norm = float(np.linalg.norm(dx))
    return dx * min(1.0, th / (norm + eps))
