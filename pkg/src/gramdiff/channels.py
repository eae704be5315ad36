"""Synthetic channel priors, angular-domain normalization, and dataset files.

Two families are provided. The Gaussian-mixture family draws vec(H_angular)
from one of K zero-mean complex Gaussians with diagonal covariance (angular
sparsity proxy); the mixture is normalized so every angular entry has unit
variance. The line-of-sight family superposes a few blurred angular clusters
with geometrically decaying powers, which concentrates the eigen-spectrum of
H H^H.

Dataset file layout (little-endian):
    magic b"GDCH" | version u16 | n_r u16 | n_t u16 | count u32
    then `count` blocks of float64 (re, im) interleaved, row-major, spatial domain.
A JSON manifest written alongside records the generating model and seed; the
same manifest reproduces a byte-identical file.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DegenerateStatisticsError, InvalidDimensionError
from .linalg import crandn, dft2, dft_matrix, idft2

__all__ = [
    "GMChannelModel",
    "LOSChannelModel",
    "Normalizer",
    "angular_stack",
    "apply_normalizer",
    "default_gm_model",
    "default_los_model",
    "fit_normalizer",
    "generate_dataset",
    "load_dataset",
    "load_manifest",
    "model_from_dict",
    "sample_channel",
    "sample_gm_realization",
    "unapply_normalizer",
]

DATASET_MAGIC = b"GDCH"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sHHHI")


@dataclass(frozen=True)
class GMChannelModel:
    """Zero-mean complex Gaussian mixture over vec(H_angular), diagonal covariances.

    variances has shape (K, n_r*n_t) in row-major angular-entry order.
    """

    n_r: int
    n_t: int
    weights: np.ndarray
    variances: np.ndarray
    build_params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if v.shape != (w.size, self.n_r * self.n_t):
            raise InvalidDimensionError(
                f"variances shape {v.shape} does not match {w.size} components of size {self.n_r * self.n_t}"
            )
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidDimensionError("component weights must be positive and sum to 1")
        if np.any(v <= 0):
            raise InvalidDimensionError("diagonal covariance entries must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "variances", v)

    @property
    def n_components(self) -> int:
        return self.weights.size

    def mixture_entry_variance(self) -> np.ndarray:
        """Per-entry variance of the mixture marginal, shape (n_r*n_t,)."""
        return self.weights @ self.variances


@dataclass(frozen=True)
class LOSChannelModel:
    """Low-rank clustered angular model (concentrated eigen-spectrum).

    rank_profile clusters with powers decaying geometrically by decay; each
    cluster is a blurred angular impulse with standard deviation
    angular_spread (in bins) on both the receive and transmit axes.
    """

    n_r: int
    n_t: int
    rank_profile: int = 1
    decay: float = 0.35
    angular_spread: float = 0.5
    build_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rank_profile < 1:
            raise InvalidDimensionError("rank_profile must be >= 1")
        if not (0 < self.decay <= 1):
            raise InvalidDimensionError("decay must lie in (0, 1]")
        if self.angular_spread <= 0:
            raise InvalidDimensionError("angular_spread must be positive")


def default_gm_model(n_r: int = 16, n_t: int = 4, n_components: int = 8, seed: int = 2024) -> GMChannelModel:
    """Seeded heavy-tailed mixture used as the default prior.

    Each component concentrates power on a few 'hot' receive-angle rows with
    lognormal per-entry texture; dividing by the mixture marginal makes every
    angular entry exactly unit variance.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, n_r, n_t, n_components)))
    n = n_r * n_t
    raw = np.empty((n_components, n))
    n_hot = max(1, n_r // 8)
    for k in range(n_components):
        hot = rng.choice(n_r, size=n_hot, replace=False)
        row_power = np.full(n_r, 0.08)
        row_power[hot] = rng.uniform(0.8, 1.6, size=n_hot)
        profile = np.repeat(row_power, n_t)
        raw[k] = profile * np.exp(0.7 * rng.standard_normal(n))
    weights = np.full(n_components, 1.0 / n_components)
    variances = raw / (weights @ raw)[None, :]
    return GMChannelModel(
        n_r=n_r,
        n_t=n_t,
        weights=weights,
        variances=variances,
        build_params={"builder": "default_gm", "n_components": n_components, "seed": seed},
    )


def default_los_model(n_r: int = 16, n_t: int = 4, seed: int = 2024) -> LOSChannelModel:
    return LOSChannelModel(
        n_r=n_r,
        n_t=n_t,
        rank_profile=2,
        decay=0.3,
        angular_spread=0.5,
        build_params={"builder": "default_los", "seed": seed},
    )


def sample_gm_realization(model: GMChannelModel, rng: np.random.Generator):
    """Draw (H_spatial, component_index) from the mixture."""
    k = int(rng.choice(model.n_components, p=model.weights))
    std = np.sqrt(model.variances[k]).reshape(model.n_r, model.n_t)
    ht = std * crandn(rng, model.n_r, model.n_t)
    return idft2(ht), k


def _blurred_impulse(n: int, center: float, spread: float) -> np.ndarray:
    """Unit-norm circularly blurred angular impulse."""
    idx = np.arange(n)
    d = np.minimum(np.abs(idx - center), n - np.abs(idx - center))
    v = np.exp(-(d**2) / (2.0 * spread**2))
    return v / np.linalg.norm(v)


def _sample_los_angular(model: LOSChannelModel, rng: np.random.Generator) -> np.ndarray:
    powers = model.decay ** np.arange(model.rank_profile)
    powers = powers / powers.sum() * (model.n_r * model.n_t)  # unit average entry variance
    ht = np.zeros((model.n_r, model.n_t), dtype=np.complex128)
    for p in powers:
        a_r = _blurred_impulse(model.n_r, rng.uniform(0, model.n_r), model.angular_spread)
        a_t = _blurred_impulse(model.n_t, rng.uniform(0, model.n_t), model.angular_spread)
        g = crandn(rng, 1, 1)[0, 0]
        ht += np.sqrt(p) * g * np.outer(a_r, a_t)
    return ht


def sample_channel(model, rng: np.random.Generator) -> np.ndarray:
    """Draw one spatial-domain channel matrix from either family."""
    if isinstance(model, GMChannelModel):
        h, _ = sample_gm_realization(model, rng)
        return h
    if isinstance(model, LOSChannelModel):
        return idft2(_sample_los_angular(model, rng))
    raise TypeError(f"unknown channel model type: {type(model)!r}")


# --------------------------------------------------------------------------
# angular-domain normalization


@dataclass(frozen=True)
class Normalizer:
    """Per-entry angular scaling, ht_normalized = scale * ht (row-major order)."""

    n_r: int
    n_t: int
    scale: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scale, dtype=float)
        if s.shape != (self.n_r * self.n_t,):
            raise InvalidDimensionError("scale length must be n_r*n_t")
        if np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise DegenerateStatisticsError("normalizer scales must be finite and positive")
        object.__setattr__(self, "scale", s)


def fit_normalizer(ht_stack: np.ndarray) -> Normalizer:
    """Fit per-entry scales 1/std over a stack of angular matrices (m, n_r, n_t)."""
    ht_stack = np.asarray(ht_stack, dtype=np.complex128)
    if ht_stack.ndim != 3 or ht_stack.shape[0] < 1:
        raise InvalidDimensionError("expected a non-empty stack of matrices")
    m, n_r, n_t = ht_stack.shape
    std = np.std(ht_stack.reshape(m, -1), axis=0)
    if np.any(std <= 0):
        raise DegenerateStatisticsError("zero-variance angular entry; cannot normalize")
    return Normalizer(n_r=n_r, n_t=n_t, scale=1.0 / std)


def apply_normalizer(norm: Normalizer, ht: np.ndarray) -> np.ndarray:
    return np.asarray(ht, dtype=np.complex128) * norm.scale.reshape(norm.n_r, norm.n_t)


def unapply_normalizer(norm: Normalizer, ht: np.ndarray) -> np.ndarray:
    return np.asarray(ht, dtype=np.complex128) / norm.scale.reshape(norm.n_r, norm.n_t)


def angular_stack(spatial_stack: np.ndarray) -> np.ndarray:
    """Apply the 2-D unitary DFT to every matrix in a (m, n_r, n_t) stack."""
    spatial_stack = np.asarray(spatial_stack, dtype=np.complex128)
    _, n_r, n_t = spatial_stack.shape
    phi_r = dft_matrix(n_r)
    phi_t = dft_matrix(n_t)
    return np.einsum("ij,mjk,kl->mil", phi_r, spatial_stack, phi_t)


# --------------------------------------------------------------------------
# dataset files


def model_to_dict(model) -> dict:
    if isinstance(model, GMChannelModel):
        d = {"kind": "gm", "n_r": model.n_r, "n_t": model.n_t}
        if model.build_params:
            d["build_params"] = dict(model.build_params)
        else:
            d["weights"] = model.weights.tolist()
            d["variances"] = model.variances.tolist()
        return d
    if isinstance(model, LOSChannelModel):
        d = {
            "kind": "los",
            "n_r": model.n_r,
            "n_t": model.n_t,
            "rank_profile": model.rank_profile,
            "decay": model.decay,
            "angular_spread": model.angular_spread,
        }
        if model.build_params:
            d["build_params"] = dict(model.build_params)
        return d
    raise TypeError(f"unknown channel model type: {type(model)!r}")


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "gm":
        bp = d.get("build_params")
        if bp and bp.get("builder") == "default_gm":
            return default_gm_model(d["n_r"], d["n_t"], bp["n_components"], bp["seed"])
        return GMChannelModel(
            n_r=d["n_r"],
            n_t=d["n_t"],
            weights=np.asarray(d["weights"], dtype=float),
            variances=np.asarray(d["variances"], dtype=float),
        )
    if kind == "los":
        return LOSChannelModel(
            n_r=d["n_r"],
            n_t=d["n_t"],
            rank_profile=d.get("rank_profile", 1),
            decay=d.get("decay", 0.35),
            angular_spread=d.get("angular_spread", 0.5),
            build_params=d.get("build_params", {}),
        )
    raise DataFormatError(f"unknown channel model kind: {kind!r}")


def generate_dataset(model, count: int, path, seed: int = 0) -> dict:
    """Sample `count` spatial channels, write the binary file plus a JSON manifest."""
    if count < 1:
        raise InvalidDimensionError("count must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xD5)))
    path = str(path)
    blocks = []
    for _ in range(count):
        h = sample_channel(model, rng)
        blocks.append(np.ascontiguousarray(h.astype("<c16")))
    payload = b"".join(b.tobytes() for b in blocks)
    header = _HEADER.pack(DATASET_MAGIC, DATASET_VERSION, model.n_r, model.n_t, count)
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc
    manifest = {
        "format": "GDCH",
        "version": DATASET_VERSION,
        "n_r": model.n_r,
        "n_t": model.n_t,
        "count": count,
        "seed": seed,
        "model": model_to_dict(model),
        "sha256": hashlib.sha256(header + payload).hexdigest(),
    }
    manifest_path = path + ".manifest.json"
    try:
        with open(manifest_path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write manifest to {manifest_path}: {exc}") from exc
    return manifest


def load_dataset(path) -> np.ndarray:
    """Read a dataset file into a (count, n_r, n_t) complex stack (spatial domain)."""
    path = str(path)
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise OSError(f"cannot read dataset from {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, n_r, n_t, count = _HEADER.unpack_from(raw)
    if magic != DATASET_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != DATASET_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + count * n_r * n_t * 16
    if len(raw) != expected:
        raise DataFormatError(f"{path}: size {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    return data.reshape(count, n_r, n_t).astype(np.complex128)


def load_manifest(path) -> dict:
    with open(str(path) + ".manifest.json", "r", encoding="utf-8") as f:
        return json.load(f)
