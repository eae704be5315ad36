"""Monte-Carlo sweeps over SNR and data-block length, with reproducible output.

Trials are paired with common random numbers: the channel and the
standardized noise draws depend only on (master seed, trial), so every
variant, SNR point, and N_d cell sees the same realizations with noise
scaled to the cell's variance. Sweep cells execute in an optional process
pool; records are merged in deterministic cell order, so the CSV output is
byte-identical for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import GMChannelModel, sample_channel, sample_gm_realization
from .errors import ConfigError, DegenerateStatisticsError, DivergenceError
from .estimators import EstimatorConfig, ModelInfo, OpCounters, estimate_genie_lmmse, estimate_gramdiff
from .gram import gram_nmse, oracle_gram, sample_gram
from .linalg import as_cmatrix, crandn, fro_norm, hermitian_eig
from .linksim import Frame, make_data, make_pilots, snr_db_to_sigma2

__all__ = [
    "RunRecord",
    "SweepSpec",
    "aggregate_records",
    "gram_spectrum_stats",
    "nmse_ch",
    "run_sweep",
    "spectral_entropy",
    "write_aggregate_csv",
    "write_records_csv",
]

CSV_HEADER = "variant,snr_db,n_d,trials,nmse_mean,nmse_stderr,divergences,mean_tstar"


def nmse_ch(h, h_hat) -> float:
    """Per-realization ||H - H_hat||_F^2 / ||H||_F^2."""
    h = as_cmatrix(h)
    h_hat = as_cmatrix(h_hat)
    denom = fro_norm(h) ** 2
    if denom == 0.0:
        raise DegenerateStatisticsError("reference channel has zero norm")
    return fro_norm(h - h_hat) ** 2 / denom


@dataclass(frozen=True)
class RunRecord:
    variant: str
    snr_db: float
    n_d: int
    trial: int
    nmse: float
    gram_nmse: float | None
    t_star: int
    diverged: bool
    wall_time: float
    h_hash: str


@dataclass(frozen=True)
class SweepSpec:
    model: GMChannelModel
    variants: tuple
    snr_grid_db: tuple
    n_d_grid: tuple = (2000,)
    n_trials: int = 100
    master_seed: int = 0
    constellation: str = "qpsk"
    output_path: str | None = None
    records_path: str | None = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.snr_grid_db or not self.n_d_grid or not self.variants:
            raise ConfigError("snr grid, n_d grid, and variants must be non-empty")
        object.__setattr__(self, "variants", tuple(self.variants))
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "n_d_grid", tuple(int(n) for n in self.n_d_grid))


def _trial_channel(spec: SweepSpec, trial: int):
    rng = np.random.default_rng(np.random.SeedSequence((spec.master_seed, 101, trial)))
    if isinstance(spec.model, GMChannelModel):
        return sample_gm_realization(spec.model, rng)
    return sample_channel(spec.model, rng), None


def _trial_frame(spec: SweepSpec, trial: int, sigma2: float, n_d: int, h: np.ndarray) -> Frame:
    n_r, n_t = h.shape
    x_p = make_pilots(n_t)
    rng_p = np.random.default_rng(np.random.SeedSequence((spec.master_seed, 103, trial)))
    y_p = h @ x_p + np.sqrt(sigma2) * crandn(rng_p, n_r, n_t)
    rng_d = np.random.default_rng(np.random.SeedSequence((spec.master_seed, 107, n_d, trial)))
    x_d = make_data(n_t, n_d, spec.constellation, rng_d)
    y_d = h @ x_d + np.sqrt(sigma2) * crandn(rng_d, n_r, n_d)
    return Frame(x_p=x_p, x_d=x_d, y_p=y_p, y_d=y_d, sigma2=sigma2)


def _run_cell(spec: SweepSpec, snr_idx: int, nd_idx: int) -> list[RunRecord]:
    snr_db = spec.snr_grid_db[snr_idx]
    n_d = spec.n_d_grid[nd_idx]
    sigma2 = snr_db_to_sigma2(snr_db)
    gm = spec.model if isinstance(spec.model, GMChannelModel) else None
    records: list[RunRecord] = []
    for trial in range(spec.n_trials):
        h, component = _trial_channel(spec, trial)
        frame = _trial_frame(spec, trial, sigma2, n_d, h)
        h_hash = hashlib.sha1(np.ascontiguousarray(h).tobytes()).hexdigest()[:12]
        info = ModelInfo(gm=gm, component_index=component, h_true=h)
        truth_gram = None
        for cfg in spec.variants:
            counters = OpCounters()
            start = time.perf_counter()
            diverged = False
            nmse = float("nan")
            g_nmse = None
            try:
                if cfg.variant == "genie-lmmse":
                    h_hat = estimate_genie_lmmse(frame, gm, component)
                else:
                    h_hat = estimate_gramdiff(frame, info, cfg, counters)
                nmse = nmse_ch(h, h_hat)
            except DivergenceError:
                diverged = True
            wall = time.perf_counter() - start
            if cfg.variant != "genie-lmmse" and cfg.gram_source == "estimated" and cfg.guidance.lambda_gram > 0:
                if truth_gram is None:
                    truth_gram = oracle_gram(h).r_spatial
                g_nmse = gram_nmse(sample_gram(frame.y_d, frame.sigma2_d, n_d, cfg.shrinkage), truth_gram)
            records.append(
                RunRecord(
                    variant=cfg.variant,
                    snr_db=snr_db,
                    n_d=n_d,
                    trial=trial,
                    nmse=nmse,
                    gram_nmse=g_nmse,
                    t_star=counters.t_star,
                    diverged=diverged,
                    wall_time=wall,
                    h_hash=h_hash,
                )
            )
    return records


def _worker(args):
    spec, snr_idx, nd_idx = args
    return _run_cell(spec, snr_idx, nd_idx)


def _worker_count(requested: int | None, n_units: int) -> int:
    cap = os.environ.get("GRAMDIFF_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    if requested is not None:
        cap = min(cap, requested)
    return max(1, min(cap, n_units))


def run_sweep(spec: SweepSpec, workers: int | None = None):
    """Execute all (snr, n_d) cells, aggregate, and persist CSV/JSON if configured.

    Returns (records, aggregate_rows). The aggregate CSV is deterministic for
    a fixed master seed regardless of the worker count.
    """
    units = [(i, j) for i in range(len(spec.snr_grid_db)) for j in range(len(spec.n_d_grid))]
    n_workers = _worker_count(workers, len(units))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            per_unit = list(pool.map(_worker, [(spec, i, j) for i, j in units]))
    else:
        per_unit = [_run_cell(spec, i, j) for i, j in units]
    records: list[RunRecord] = [r for unit in per_unit for r in unit]
    rows = aggregate_records(spec, records)
    if spec.output_path:
        write_aggregate_csv(spec.output_path, rows)
        summary = {
            "master_seed": spec.master_seed,
            "n_trials": spec.n_trials,
            "constellation": spec.constellation,
            "cells": rows,
        }
        with open(spec.output_path + ".summary.json", "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    if spec.records_path:
        write_records_csv(spec.records_path, records)
    return records, rows


def aggregate_records(spec: SweepSpec, records: list[RunRecord]) -> list[dict]:
    """One row per (variant, snr, n_d) cell, in spec order."""
    by_cell: dict[tuple, list[RunRecord]] = {}
    for r in records:
        by_cell.setdefault((r.variant, r.snr_db, r.n_d), []).append(r)
    rows = []
    for cfg in spec.variants:
        for snr_db in spec.snr_grid_db:
            for n_d in spec.n_d_grid:
                cell = by_cell.get((cfg.variant, snr_db, n_d), [])
                ok = [r.nmse for r in cell if not r.diverged]
                n_ok = len(ok)
                mean = float(np.mean(ok)) if n_ok else float("nan")
                stderr = float(np.std(ok, ddof=1) / np.sqrt(n_ok)) if n_ok > 1 else 0.0
                rows.append(
                    {
                        "variant": cfg.variant,
                        "snr_db": snr_db,
                        "n_d": n_d,
                        "trials": len(cell),
                        "nmse_mean": mean,
                        "nmse_stderr": stderr,
                        "divergences": sum(1 for r in cell if r.diverged),
                        "mean_tstar": float(np.mean([r.t_star for r in cell])) if cell else 0.0,
                    }
                )
    return rows


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_aggregate_csv(path: str, rows: list[dict]) -> None:
    cols = CSV_HEADER.split(",")
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def write_records_csv(path: str, records: list[RunRecord]) -> None:
    lines = ["variant,snr_db,n_d,trial,nmse,gram_nmse,t_star,diverged,wall_time,h_hash"]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.variant,
                    _fmt(r.snr_db),
                    str(r.n_d),
                    str(r.trial),
                    _fmt(r.nmse),
                    "" if r.gram_nmse is None else _fmt(r.gram_nmse),
                    str(r.t_star),
                    "1" if r.diverged else "0",
                    _fmt(r.wall_time),
                    r.h_hash,
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def spectral_entropy(r) -> float:
    """Normalized eigenvalue entropy of a PSD matrix, in [0, 1]."""
    r = as_cmatrix(r)
    w = np.maximum(hermitian_eig(r).eigenvalues, 0.0)
    total = w.sum()
    if total <= 0:
        raise DegenerateStatisticsError("matrix has zero trace")
    p = w / total
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / np.log(r.shape[0]))


def gram_spectrum_stats(model, n_samples: int, seed: int = 0) -> dict:
    """Mean and variance of the realization-level Gram spectral entropy."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 113)))
    ent = np.empty(n_samples)
    for i in range(n_samples):
        h = sample_channel(model, rng)
        ent[i] = spectral_entropy(h @ h.conj().T)
    return {
        "n_samples": n_samples,
        "mean_entropy": float(ent.mean()),
        "var_entropy": float(ent.var(ddof=1)) if n_samples > 1 else 0.0,
    }
