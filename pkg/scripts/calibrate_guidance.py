#!/usr/bin/env python3
"""Seeded calibration of the guidance scales and the expected directional margins.

Writes calibration/guidance_grid.csv (grid search over lambda_like and
lambda_gram at representative SNR points) and
calibration/directional_margins.csv (frozen-default margins of gramdiff over
the dm and dm+lik baselines across the default sweep cells). Rerunning this
script reproduces both files byte-for-byte.
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gramdiff.channels import default_gm_model, sample_gm_realization
from gramdiff.estimators import EstimatorConfig, ModelInfo, config_for_variant, estimate_gramdiff
from gramdiff.guidance import GuidanceConfig
from gramdiff.harness import nmse_ch
from gramdiff.linksim import make_data, make_pilots, snr_db_to_sigma2, transmit

SEED = 5
N_TRIALS = 120


def _trials(gm, snr_db, n_d):
    sigma2 = snr_db_to_sigma2(snr_db)
    rng = np.random.default_rng(SEED)
    out = []
    for _ in range(N_TRIALS):
        h, k = sample_gm_realization(gm, rng)
        frame = transmit(h, make_pilots(gm.n_t), make_data(gm.n_t, n_d, "qpsk", rng), sigma2, rng)
        out.append((h, k, frame))
    return out


def _mean_nmse(gm, trials, cfg):
    vals = []
    for h, k, frame in trials:
        info = ModelInfo(gm=gm, component_index=k, h_true=h)
        vals.append(nmse_ch(h, estimate_gramdiff(frame, info, cfg)))
    return float(np.mean(vals))


def grid_search(gm, path):
    rows = ["snr_db,n_d,lambda_like,lambda_gram,nmse_mean"]
    for snr_db in (-15.0, -5.0, 5.0):
        trials = _trials(gm, snr_db, 2000)
        for lam_like in (0.0, 0.1, 0.3, 1.0):
            for lam_gram in (0.0, 0.2, 0.5, 1.0):
                g = GuidanceConfig(lambda_like=lam_like, lambda_gram=lam_gram)
                variant = (
                    "dm" if lam_like == 0 and lam_gram == 0
                    else "dm+lik" if lam_gram == 0
                    else "dm+gram" if lam_like == 0
                    else "gramdiff"
                )
                cfg = EstimatorConfig(variant=variant, gram_source="estimated" if lam_gram > 0 else "none", guidance=g)
                nmse = _mean_nmse(gm, trials, cfg)
                rows.append(f"{snr_db:g},2000,{lam_like:g},{lam_gram:g},{nmse:.6f}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")
    print(f"wrote {path}")


def directional_margins(gm, path):
    base = EstimatorConfig(variant="gramdiff", gram_source="estimated")
    cfg_gd = base
    cfg_dl = config_for_variant("dm+lik", base)
    cfg_dm = config_for_variant("dm", base)
    rows = ["snr_db,n_d,nmse_gramdiff,nmse_dm_lik,nmse_dm,margin_vs_dm,ratio_vs_dm_lik"]
    for snr_db in (-15.0, -10.0, -5.0, 0.0, 5.0):
        for n_d in (5, 20, 200, 2000):
            trials = _trials(gm, snr_db, n_d)
            gd = _mean_nmse(gm, trials, cfg_gd)
            dl = _mean_nmse(gm, trials, cfg_dl)
            dm = _mean_nmse(gm, trials, cfg_dm)
            rows.append(
                f"{snr_db:g},{n_d},{gd:.6f},{dl:.6f},{dm:.6f},{(dm - gd) / dm:.4f},{gd / dl:.4f}"
            )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")
    print(f"wrote {path}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=os.path.join(os.path.dirname(__file__), "..", "calibration"))
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    gm = default_gm_model(16, 4)
    grid_search(gm, os.path.join(args.out_dir, "guidance_grid.csv"))
    directional_margins(gm, os.path.join(args.out_dir, "directional_margins.csv"))


if __name__ == "__main__":
    main()
