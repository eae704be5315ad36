"""Gram-matrix-guided diffusion posterior sampling for semi-blind MIMO channel estimation."""

__version__ = "0.1.0"

from .channels import (
    GMChannelModel,
    LOSChannelModel,
    Normalizer,
    apply_normalizer,
    default_gm_model,
    default_los_model,
    fit_normalizer,
    generate_dataset,
    load_dataset,
    sample_channel,
    unapply_normalizer,
)
from .diffusion import (
    AnalyticGMDenoiser,
    NoiseSchedule,
    ddim_step,
    forward_diffuse,
    make_schedule,
    match_t,
    tweedie,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    DegenerateNoiseError,
    DegenerateStatisticsError,
    DivergenceError,
    GramDiffError,
    InsufficientDataError,
    InvalidDimensionError,
    PreconditionError,
)
from .estimators import (
    EstimatorConfig,
    ModelInfo,
    OpCounters,
    config_for_variant,
    estimate_genie_lmmse,
    estimate_gramdiff,
    op_count_report,
)
from .gram import GramEstimate, gram_nmse, oracle_gram, sample_gram
from .guidance import (
    GuidanceConfig,
    clip_update,
    gate,
    gram_guidance,
    lambda_gram_at,
    lambda_like_at,
    likelihood_guidance,
)
from .harness import RunRecord, SweepSpec, gram_spectrum_stats, nmse_ch, run_sweep
from .linalg import HermitianEig, adjoint, dft2, dft_matrix, fro_norm, hermitian_eig, idft2, matmul
from .linksim import Frame, make_data, make_pilots, snr_db_to_sigma2, transmit
from .neural import NeuralDenoiser, read_goldens, read_weights, schedule_hash, write_goldens
from .preproc import AngularObservation, decorrelate, to_angular_observation
