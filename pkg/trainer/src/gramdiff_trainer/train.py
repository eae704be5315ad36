"""Noise-prediction training on angular-domain channel datasets.

The forward process is variance preserving: H_t = sqrt(abar_t) H_0 +
sqrt(1 - abar_t) eta with complex unit-variance eta (E|eta|^2 = 1). Training
minimizes the MSE between the network output and the sqrt(2)-scaled noise
planes, with t drawn uniformly from 1..T per sample and fresh noise per
batch. Weights export to the portable cnn3-film-v1 file; five golden
input/output pairs evaluated by this trainer's own forward pass are written
alongside for cross-implementation verification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import torch

from .formats import load_dataset, schedule_hash, write_goldens, write_weights
from .model import NoisePredictor


@dataclass
class TrainSpec:
    dataset_path: str
    weights_path: str
    goldens_path: str
    t_max: int = 300
    beta_start: float = 1e-4
    beta_end: float = 0.02
    schedule_kind: str = "linear"
    epochs: int = 8
    batch_size: int = 128
    lr: float = 2e-3
    holdout_fraction: float = 0.1
    normalizer_path: str | None = None
    seed: int = 0

    def schedule_params(self) -> dict:
        return {
            "t_max": self.t_max,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "kind": self.schedule_kind,
        }


@dataclass
class TrainResult:
    holdout_mse: float
    zero_predictor_mse: float
    holdout_mse_per_t: dict = field(default_factory=dict)
    zero_predictor_mse_per_t: dict = field(default_factory=dict)
    manifest_path: str = ""


def make_alpha_bar(spec: TrainSpec) -> np.ndarray:
    if spec.schedule_kind == "linear":
        beta = np.linspace(spec.beta_start, spec.beta_end, spec.t_max)
    elif spec.schedule_kind == "cosine":
        s = 0.008
        steps = np.arange(spec.t_max + 1)
        f = np.cos(((steps / spec.t_max) + s) / (1 + s) * np.pi / 2.0) ** 2
        beta = np.clip(1.0 - f[1:] / f[:-1], spec.beta_start, 0.999)
    else:
        raise ValueError(f"unknown schedule kind {spec.schedule_kind!r}")
    return np.cumprod(1.0 - beta)


def _to_angular(spatial: np.ndarray) -> np.ndarray:
    # unitary 2-D DFT along both axes
    return np.fft.fft2(spatial, norm="ortho")


def _apply_normalizer(ht: np.ndarray, path: str | None) -> np.ndarray:
    if path is None:
        return ht
    with open(path, "r", encoding="utf-8") as f:
        norm = json.load(f)
    scale = np.asarray(norm["scale"], dtype=float).reshape(ht.shape[1], ht.shape[2])
    return ht * scale[None, :, :]


def _planes(batch: np.ndarray) -> torch.Tensor:
    scaled = np.stack([batch.real, batch.imag], axis=1) * np.sqrt(2.0)
    return torch.tensor(scaled, dtype=torch.float32)


def _diffuse(h0: np.ndarray, abar: np.ndarray, t_idx: np.ndarray, rng: np.random.Generator):
    a = abar[t_idx - 1][:, None, None]
    eta = (rng.standard_normal(h0.shape) + 1j * rng.standard_normal(h0.shape)) / np.sqrt(2.0)
    ht = np.sqrt(a) * h0 + np.sqrt(1.0 - a) * eta
    return ht, eta


def _eval_holdout(model: NoisePredictor, holdout: np.ndarray, abar: np.ndarray, rng, t_values):
    """Per-real-coordinate MSE of the model and the zero predictor at fixed t."""
    per_t = {}
    zero_per_t = {}
    with torch.no_grad():
        for t in t_values:
            t_idx = np.full(holdout.shape[0], t, dtype=int)
            ht, eta = _diffuse(holdout, abar, t_idx, rng)
            target = _planes(eta)
            pred = model(_planes(ht), torch.tensor(t_idx))
            per_t[int(t)] = float(torch.mean((pred - target) ** 2))
            zero_per_t[int(t)] = float(torch.mean(target**2))
    return per_t, zero_per_t


def train(spec: TrainSpec) -> TrainResult:
    torch.manual_seed(spec.seed)
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0x7E)))
    spatial = load_dataset(spec.dataset_path)
    ht0 = _apply_normalizer(_to_angular(spatial), spec.normalizer_path)
    n_hold = max(1, int(spec.holdout_fraction * ht0.shape[0]))
    holdout, train_set = ht0[:n_hold], ht0[n_hold:]
    if train_set.shape[0] == 0:
        raise ValueError("dataset too small for the requested holdout fraction")
    abar = make_alpha_bar(spec)
    n_r, n_t = ht0.shape[1], ht0.shape[2]

    model = NoisePredictor(spec.t_max)
    opt = torch.optim.Adam(model.parameters(), lr=spec.lr)
    for _ in range(spec.epochs):
        order = rng.permutation(train_set.shape[0])
        for lo in range(0, order.size, spec.batch_size):
            batch = train_set[order[lo : lo + spec.batch_size]]
            t_idx = rng.integers(1, spec.t_max + 1, size=batch.shape[0])
            ht, eta = _diffuse(batch, abar, t_idx, rng)
            pred = model(_planes(ht), torch.tensor(t_idx))
            loss = torch.mean((pred - _planes(eta)) ** 2)
            opt.zero_grad()
            loss.backward()
            opt.step()

    eval_t = sorted({max(1, round(spec.t_max * k / 5)) for k in range(1, 6)})
    per_t, zero_per_t = _eval_holdout(model, holdout, abar, np.random.default_rng(spec.seed + 1), eval_t)
    holdout_mse = float(np.mean(list(per_t.values())))
    zero_mse = float(np.mean(list(zero_per_t.values())))

    sched_hash = schedule_hash(spec.schedule_params())
    write_weights(spec.weights_path, model.export_tensors(), n_r, n_t, sched_hash)
    export_goldens(model, n_r, n_t, spec.goldens_path, t_max=spec.t_max, seed=spec.seed)

    manifest_path = spec.weights_path + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(
            {
                "dataset": str(spec.dataset_path),
                "epochs": spec.epochs,
                "batch_size": spec.batch_size,
                "lr": spec.lr,
                "seed": spec.seed,
                "schedule": spec.schedule_params(),
                "schedule_hash": sched_hash,
                "holdout_mse": holdout_mse,
                "holdout_mse_per_t": per_t,
                "zero_predictor_mse": zero_mse,
                "zero_predictor_mse_per_t": zero_per_t,
            },
            f,
            indent=2,
            sort_keys=True,
        )
        f.write("\n")
    return TrainResult(
        holdout_mse=holdout_mse,
        zero_predictor_mse=zero_mse,
        holdout_mse_per_t=per_t,
        zero_predictor_mse_per_t=zero_per_t,
        manifest_path=manifest_path,
    )


def export_goldens(model: NoisePredictor, n_r: int, n_t: int, path, t_max: int, seed: int = 0) -> None:
    """Deterministic forward pass on 5 seeded inputs across 5 distinct steps."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x60)))
    records = []
    for k in range(5):
        t = max(1, round(t_max * (k + 1) / 5))
        ht = (rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))) / np.sqrt(2.0)
        records.append((t, ht, model.predict_complex(ht, t)))
    write_goldens(path, records)
