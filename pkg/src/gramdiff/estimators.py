"""End-to-end channel estimators: guided reverse diffusion and the genie LMMSE bound."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .channels import GMChannelModel
from .diffusion import (
    AnalyticGMDenoiser,
    NoiseSchedule,
    _reverse_from_eps,
    _tweedie_from_eps,
    make_schedule,
    match_t,
)
from .errors import ConfigError, DivergenceError, InsufficientDataError
from .gram import oracle_gram, sample_gram
from .guidance import (
    GuidanceConfig,
    clip_update,
    gram_guidance,
    gram_strength_multiplier,
    lambda_gram_at,
    lambda_like_at,
    likelihood_guidance,
)
from .linalg import as_cmatrix, dft2, idft2
from .linksim import Frame
from .preproc import decorrelate, to_angular_observation

__all__ = [
    "EstimatorConfig",
    "ModelInfo",
    "OpCounters",
    "VARIANTS",
    "config_for_variant",
    "estimate_genie_lmmse",
    "estimate_gramdiff",
    "genie_lmmse_dense",
    "op_count_report",
]

VARIANTS = ("dm", "dm+lik", "dm+gram", "gramdiff", "genie-lmmse")


@dataclass(frozen=True)
class ModelInfo:
    """Side information available per trial: the prior, and genie/oracle fields."""

    gm: GMChannelModel | None = None
    component_index: int | None = None
    h_true: np.ndarray | None = None


@dataclass
class OpCounters:
    """Instrumentation of one estimator run."""

    t_star: int = 0
    denoiser_evals: int = 0
    like_evals: int = 0
    gram_evals: int = 0
    gram_estimates: int = 0


@dataclass(frozen=True)
class EstimatorConfig:
    t_max: int = 300
    beta_start: float = 1e-4
    beta_end: float = 0.02
    schedule_kind: str = "linear"
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    backend: str = "analytic-gm"
    gram_source: str = "none"  # none | oracle | estimated
    shrinkage: float = 0.0
    variant: str = "dm"
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        g = self.guidance
        if self.variant == "dm" and (g.lambda_like != 0 or g.lambda_gram != 0):
            raise ConfigError("variant 'dm' requires both guidance scales to be zero")
        if self.variant == "dm+lik" and g.lambda_gram != 0:
            raise ConfigError("variant 'dm+lik' requires lambda_gram = 0")
        if self.variant == "dm+gram" and g.lambda_like != 0:
            raise ConfigError("variant 'dm+gram' requires lambda_like = 0")
        if self.gram_source not in ("none", "oracle", "estimated"):
            raise ConfigError(f"unknown gram source {self.gram_source!r}")
        if g.lambda_gram > 0 and self.variant in ("dm+gram", "gramdiff") and self.gram_source == "none":
            raise ConfigError("Gram-guided variants need gram_source 'oracle' or 'estimated'")

    def schedule(self) -> NoiseSchedule:
        return _schedule_cached(self.t_max, self.beta_start, self.beta_end, self.schedule_kind)


@lru_cache(maxsize=32)
def _schedule_cached(t_max, beta_start, beta_end, kind) -> NoiseSchedule:
    return make_schedule(t_max, beta_start, beta_end, kind)


def config_for_variant(variant: str, base: EstimatorConfig) -> EstimatorConfig:
    """Clone a config, zeroing whichever guidance scales the variant excludes."""
    g = base.guidance
    if variant == "dm":
        g = replace(g, lambda_like=0.0, lambda_gram=0.0)
    elif variant == "dm+lik":
        g = replace(g, lambda_gram=0.0)
    elif variant == "dm+gram":
        g = replace(g, lambda_like=0.0)
    elif variant not in ("gramdiff", "genie-lmmse"):
        raise ConfigError(f"unknown variant {variant!r}")
    gram_source = base.gram_source
    if variant in ("dm", "dm+lik"):
        gram_source = "none"
    elif gram_source == "none":
        gram_source = "estimated"
    return replace(base, variant=variant, guidance=g, gram_source=gram_source)


_backend_cache: dict[int, tuple] = {}


def _resolve_backend(cfg: EstimatorConfig, info: ModelInfo):
    if cfg.backend == "analytic-gm":
        if info.gm is None:
            raise ConfigError("analytic-gm backend needs a GM model in ModelInfo")
        hit = _backend_cache.get(id(info.gm))
        if hit is not None and hit[0] is info.gm:
            return hit[1]
        backend = AnalyticGMDenoiser(info.gm)
        _backend_cache[id(info.gm)] = (info.gm, backend)
        return backend
    if cfg.backend.startswith("neural:"):
        from .neural import NeuralDenoiser

        path = cfg.backend.split(":", 1)[1]
        hit = _backend_cache.get(hash(("neural", path)))
        if hit is not None and hit[0] == path:
            return hit[1]
        backend = NeuralDenoiser(path)
        backend.check_schedule(cfg.schedule())
        _backend_cache[hash(("neural", path))] = (path, backend)
        return backend
    raise ConfigError(f"unknown backend {cfg.backend!r}")


def _gram_reliability_weight(ge, sigma2_d: float, n_d: int) -> float:
    """Fraction of the sample Gram's squared norm attributable to the channel.

    The sampling error of the bias-corrected sample Gram has expected squared
    Frobenius norm about (tr R + N_R sigma2_d)^2 / N_d. Comparing that against
    the estimate's own squared norm (which includes the error energy) yields a
    weight in [0, 1] that vanishes when the estimate is noise-dominated.
    """
    n_r = ge.r_spatial.shape[0]
    tr = float(np.trace(ge.r_spatial).real)
    noise2 = (tr + n_r * sigma2_d) ** 2 / n_d
    signal2 = float(np.linalg.norm(ge.r_spatial)) ** 2 - noise2
    if signal2 <= 0.0:
        return 0.0
    return signal2 / (signal2 + noise2)


def _gram_target(frame: Frame, info: ModelInfo, cfg: EstimatorConfig, counters: OpCounters | None):
    """Angular Gram estimate and the effective guidance multiplier.

    The estimated source damps guidance by the static small-N_d table times a
    per-trial reliability weight; a noise-dominated or degenerate estimate
    drops Gram guidance entirely (graceful fallback to likelihood-only).
    """
    if cfg.gram_source == "oracle":
        if info.h_true is None:
            raise ConfigError("oracle Gram source needs h_true in ModelInfo")
        ge = oracle_gram(info.h_true)
        mult = 1.0
    else:
        if frame.n_d < 1:
            raise InsufficientDataError("estimated Gram source needs n_d >= 1")
        ge = sample_gram(frame.y_d, frame.sigma2_d, frame.n_d, shrinkage=cfg.shrinkage)
        mult = gram_strength_multiplier(cfg.guidance, frame.n_d)
        mult *= _gram_reliability_weight(ge, frame.sigma2_d, frame.n_d)
    if counters is not None:
        counters.gram_estimates += 1
    if ge.low_confidence or mult <= 0.0:
        return None, 0.0
    return ge.r_angular, mult


def estimate_gramdiff(frame: Frame, info: ModelInfo, cfg: EstimatorConfig, counters: OpCounters | None = None) -> np.ndarray:
    """Guided deterministic reverse diffusion from the SNR-matched step.

    Runs: pilot decorrelation and normalization, start-step selection, the
    optional Gram estimate, then t* reverse steps each adding the scaled
    likelihood residual and the norm-clipped Gram gradient. Returns the
    spatial-domain estimate. Deterministic given the frame and config.

    The Gram gradient at step t is taken against the target scaled by
    1 / ((1 + sigma2) * abar_t): the reverse iteration tracks the running
    clean estimate divided by sqrt(abar_t), and the estimate itself carries
    the posterior energy fraction 1/(1+sigma2), so the unscaled clean Gram
    would force energy inflation at low SNR. At t = t* the scale is 1 within
    grid quantization, recovering the plain target.
    """
    if frame.sigma2 == 0.0:
        # noiseless pilots determine the channel exactly; diffusion adds nothing
        return idft2(to_angular_observation(frame.y_p, frame.x_p, 0.0).y_tilde)
    obs = to_angular_observation(frame.y_p, frame.x_p, frame.sigma2)
    schedule = cfg.schedule()
    backend = _resolve_backend(cfg, info)
    t_star = match_t(obs.snr, schedule)
    if counters is not None:
        counters.t_star = t_star

    lam_like = cfg.guidance.lambda_like
    lam_gram = cfg.guidance.lambda_gram
    r_ang = None
    gram_mult = 0.0
    if lam_gram > 0 and cfg.gram_source != "none":
        r_ang, gram_mult = _gram_target(frame, info, cfg, counters)
        if r_ang is None:
            lam_gram = 0.0  # unreliable estimate: fall back to likelihood-only guidance

    state = obs.y_tilde
    y_ref = obs.y_tilde_raw
    a_obs = 1.0 / (1.0 + frame.sigma2)
    th = cfg.guidance.clip_threshold * gram_mult
    clip_eps = cfg.guidance.clip_epsilon
    # overflow/invalid inside the loop is a handled condition (DivergenceError)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(t_star, 0, -1):
            eps = backend.epsilon(state, t, schedule)
            if counters is not None:
                counters.denoiser_evals += 1
            nxt = _reverse_from_eps(state, t, schedule, eps)
            if lam_like > 0:
                x0 = _tweedie_from_eps(state, t, schedule, eps)
                g = likelihood_guidance(y_ref, x0, frame.sigma2)
                nxt = nxt + lambda_like_at(t, schedule, cfg.guidance, obs.snr) * g
                if counters is not None:
                    counters.like_evals += 1
            if lam_gram > 0:
                target = (a_obs / schedule.alpha_bar_at(t)) * r_ang
                g = gram_guidance(state, target)
                upd = (lambda_gram_at(t, schedule, cfg.guidance) * gram_mult) * g
                nxt = nxt + clip_update(upd, th, clip_eps)
                if counters is not None:
                    counters.gram_evals += 1
            if not np.all(np.isfinite(nxt.real)) or not np.all(np.isfinite(nxt.imag)):
                raise DivergenceError(step=t)
            state = nxt
    return idft2(state)


def estimate_genie_lmmse(frame: Frame, gm_model: GMChannelModel, component_index: int) -> np.ndarray:
    """Per-entry LMMSE given the true mixture component's diagonal angular covariance."""
    if not (0 <= component_index < gm_model.n_components):
        raise IndexError(f"component index {component_index} out of range 0..{gm_model.n_components - 1}")
    y_ang = dft2(decorrelate(frame.y_p, frame.x_p))
    c = gm_model.variances[component_index].reshape(gm_model.n_r, gm_model.n_t)
    return idft2(c / (c + frame.sigma2) * y_ang)


def genie_lmmse_dense(y_tilde_raw, cov: np.ndarray, sigma2: float) -> np.ndarray:
    """Dense-covariance LMMSE on vec(Y_angular): C (C + sigma2 I)^{-1} vec(y).

    O(N^3) reference path used to validate the per-entry formula on diagonal
    covariances.
    """
    y = as_cmatrix(y_tilde_raw)
    n = y.size
    cov = np.asarray(cov, dtype=np.complex128)
    if cov.shape != (n, n):
        raise ConfigError(f"covariance shape {cov.shape} != ({n}, {n})")
    x = np.linalg.solve(cov + sigma2 * np.eye(n), y.reshape(-1))
    return (cov @ x).reshape(y.shape)


def op_count_report(cfg: EstimatorConfig, dims: dict) -> dict:
    """Predicted operation counts for one estimator run.

    dims needs n_r, n_t, n_d and either sigma2 or snr_db. Gram flop figures
    are order-of-magnitude complex-MAC counts (8 real flops per MAC).
    """
    n_r, n_t, n_d = int(dims["n_r"]), int(dims["n_t"]), int(dims["n_d"])
    sigma2 = dims.get("sigma2")
    if sigma2 is None:
        sigma2 = 10.0 ** (-float(dims["snr_db"]) / 10.0)
    schedule = cfg.schedule()
    t_star = match_t(1.0 / sigma2, schedule)
    uses_like = cfg.guidance.lambda_like > 0
    uses_gram = cfg.guidance.lambda_gram > 0 and cfg.gram_source != "none"
    return {
        "variant": cfg.variant,
        "t_star": t_star,
        "denoiser_evals": t_star,
        "like_evals": t_star if uses_like else 0,
        "gram_evals": t_star if uses_gram else 0,
        "gram_estimate_flops": 8 * n_r * n_r * n_d if cfg.gram_source == "estimated" and uses_gram else 0,
        "gram_step_flops": 16 * n_r * n_r * n_t if uses_gram else 0,
    }
