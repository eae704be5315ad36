"""Trainer command line: train a noise predictor or re-export golden vectors."""

from __future__ import annotations

import argparse
import sys

from .formats import FormatError, read_weights, schedule_hash
from .model import NoisePredictor
from .train import TrainSpec, export_goldens, train


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gramdiff-train", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train on a GDCH dataset and export weights + goldens")
    t.add_argument("--dataset", required=True)
    t.add_argument("--weights", required=True)
    t.add_argument("--goldens", required=True)
    t.add_argument("--epochs", type=int, default=8)
    t.add_argument("--batch-size", type=int, default=128)
    t.add_argument("--lr", type=float, default=2e-3)
    t.add_argument("--t-max", type=int, default=300)
    t.add_argument("--beta-start", type=float, default=1e-4)
    t.add_argument("--beta-end", type=float, default=0.02)
    t.add_argument("--schedule-kind", default="linear")
    t.add_argument("--normalizer", default=None)
    t.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("goldens", help="re-export golden vectors from a weight file")
    g.add_argument("--weights", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--t-max", type=int, default=300)
    g.add_argument("--beta-start", type=float, default=1e-4)
    g.add_argument("--beta-end", type=float, default=0.02)
    g.add_argument("--schedule-kind", default="linear")
    g.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            spec = TrainSpec(
                dataset_path=args.dataset,
                weights_path=args.weights,
                goldens_path=args.goldens,
                t_max=args.t_max,
                beta_start=args.beta_start,
                beta_end=args.beta_end,
                schedule_kind=args.schedule_kind,
                epochs=args.epochs,
                batch_size=args.batch_size,
                lr=args.lr,
                normalizer_path=args.normalizer,
                seed=args.seed,
            )
            result = train(spec)
            print(
                f"trained: holdout mse {result.holdout_mse:.4f} "
                f"(zero predictor {result.zero_predictor_mse:.4f}); wrote {args.weights}, {args.goldens}"
            )
            return 0
        if args.command == "goldens":
            loaded = read_weights(args.weights)
            params = {
                "t_max": args.t_max,
                "beta_start": args.beta_start,
                "beta_end": args.beta_end,
                "kind": args.schedule_kind,
            }
            if loaded["header"]["schedule_hash"] != schedule_hash(params):
                raise FormatError("schedule parameters do not match the weight-file schedule hash")
            model = NoisePredictor(args.t_max)
            model.load_tensors(loaded["tensors"])
            export_goldens(
                model, loaded["header"]["n_r"], loaded["header"]["n_t"],
                args.out, t_max=args.t_max, seed=args.seed,
            )
            print(f"wrote goldens to {args.out}")
            return 0
        raise FormatError(f"unknown command {args.command!r}")
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
