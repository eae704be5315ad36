"""Command-line interface.

Subcommands: gen-data, fit-norm, sweep, estimate, spectrum, goldens, report.
Every flag mirrors a configuration key; flags override values loaded with
--config. Exit codes: 0 success, 2 configuration or format error, 3 sweep
divergence count above the configured threshold.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import __version__
from .channels import angular_stack, fit_normalizer, generate_dataset, load_dataset
from .config import estimator_config_from, load_config, model_from_config
from .errors import ConfigError, DataFormatError, GramDiffError, InvalidDimensionError
from .estimators import ModelInfo, OpCounters, estimate_genie_lmmse, estimate_gramdiff
from .harness import SweepSpec, gram_spectrum_stats, nmse_ch, run_sweep
from .linalg import crandn
from .linksim import snr_db_to_sigma2
from .neural import NeuralDenoiser, read_goldens, write_goldens


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


class _Parser(argparse.ArgumentParser):
    # let values like "-10,-5,0" pass as arguments rather than option strings
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\d+(\.\d*)?(,-?\d+(\.\d*)?)*$")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gramdiff", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON config file merged over the defaults")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="sample a channel dataset to a binary file")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--model", choices=["gm", "los"], default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-r", type=int, default=None)
    g.add_argument("--n-t", type=int, default=None)

    f = sub.add_parser("fit-norm", help="fit per-entry angular scales from a dataset")
    f.add_argument("--dataset", required=True)
    f.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="run a Monte-Carlo NMSE sweep")
    s.add_argument("--out", required=True, help="aggregate CSV path")
    s.add_argument("--records-out", default=None, help="optional per-trial records CSV")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--snr-grid", type=_parse_float_list, default=None, metavar="DB,DB,...")
    s.add_argument("--nd-grid", type=_parse_int_list, default=None, metavar="N,N,...")
    s.add_argument("--variants", default=None, metavar="V,V,...")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--gram-source", choices=["oracle", "estimated"], default=None)
    s.add_argument("--divergence-threshold", type=int, default=None)

    e = sub.add_parser("estimate", help="estimate one frame and print its NMSE")
    e.add_argument("--snr-db", type=float, required=True)
    e.add_argument("--n-d", type=int, default=None)
    e.add_argument("--variant", default="gramdiff")
    e.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("spectrum", help="Gram spectral-entropy statistics of a model")
    sp.add_argument("--model", choices=["gm", "los"], default=None)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    go = sub.add_parser("goldens", help="emit or verify denoiser golden vectors")
    go_sub = go.add_subparsers(dest="action", required=True)
    ge = go_sub.add_parser("emit")
    ge.add_argument("--weights", required=True)
    ge.add_argument("--out", required=True)
    ge.add_argument("--seed", type=int, default=0)
    gv = go_sub.add_parser("verify")
    gv.add_argument("--weights", required=True)
    gv.add_argument("--goldens", required=True)
    gv.add_argument("--tol", type=float, default=1e-4)

    r = sub.add_parser("report", help="tabulate one or more aggregate CSVs")
    r.add_argument("csv", nargs="+")
    return p


def _cmd_gen_data(args, config) -> int:
    if args.model:
        config["channel_model"]["kind"] = args.model
    if args.n_r:
        config["dims"]["n_r"] = args.n_r
    if args.n_t:
        config["dims"]["n_t"] = args.n_t
    model = model_from_config(config)
    manifest = generate_dataset(model, args.count, args.out, seed=args.seed)
    print(f"wrote {args.count} matrices to {args.out} (sha256 {manifest['sha256'][:16]}...)")
    return 0


def _cmd_fit_norm(args) -> int:
    stack = load_dataset(args.dataset)
    norm = fit_normalizer(angular_stack(stack))
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump({"n_r": norm.n_r, "n_t": norm.n_t, "scale": norm.scale.tolist()}, f)
        f.write("\n")
    print(f"fitted normalizer over {stack.shape[0]} samples -> {args.out}")
    return 0


def _cmd_sweep(args, config) -> int:
    sweep = config["sweep"]
    if args.trials is not None:
        sweep["n_trials"] = args.trials
    if args.snr_grid is not None:
        sweep["snr_grid_db"] = args.snr_grid
    if args.nd_grid is not None:
        sweep["n_d_grid"] = args.nd_grid
    if args.variants is not None:
        sweep["variants"] = [v.strip() for v in args.variants.split(",")]
    if args.seed is not None:
        sweep["master_seed"] = args.seed
    if args.gram_source is not None:
        sweep["gram_source"] = args.gram_source
    if args.divergence_threshold is not None:
        sweep["divergence_threshold"] = args.divergence_threshold
    model = model_from_config(config)
    variants = tuple(estimator_config_from(config, v) for v in sweep["variants"])
    spec = SweepSpec(
        model=model,
        variants=variants,
        snr_grid_db=tuple(sweep["snr_grid_db"]),
        n_d_grid=tuple(sweep["n_d_grid"]),
        n_trials=int(sweep["n_trials"]),
        master_seed=int(sweep["master_seed"]),
        constellation=sweep["constellation"],
        output_path=args.out,
        records_path=args.records_out,
    )
    records, rows = run_sweep(spec, workers=args.workers)
    divergences = sum(1 for r in records if r.diverged)
    print(f"wrote {len(rows)} aggregate cells to {args.out} ({divergences} divergences)")
    threshold = sweep.get("divergence_threshold")
    if threshold is not None and divergences > threshold:
        print(f"divergence count {divergences} exceeds threshold {threshold}", file=sys.stderr)
        return 3
    return 0


def _cmd_estimate(args, config) -> int:
    from .channels import GMChannelModel, sample_channel, sample_gm_realization
    from .harness import _trial_frame  # reuse the paired frame construction

    model = model_from_config(config)
    sigma2 = snr_db_to_sigma2(args.snr_db)
    n_d = args.n_d if args.n_d is not None else config["sweep"]["n_d_grid"][0]
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 101, 0)))
    if isinstance(model, GMChannelModel):
        h, component = sample_gm_realization(model, rng)
        gm = model
    else:
        h, component, gm = sample_channel(model, rng), None, None
    spec = SweepSpec(
        model=model,
        variants=(estimator_config_from(config, "dm"),),
        snr_grid_db=(args.snr_db,),
        n_d_grid=(n_d,),
        master_seed=args.seed,
    )
    frame = _trial_frame(spec, 0, sigma2, n_d, h)
    cfg = estimator_config_from(config, args.variant, seed=args.seed)
    counters = OpCounters()
    if args.variant == "genie-lmmse":
        h_hat = estimate_genie_lmmse(frame, gm, component)
    else:
        h_hat = estimate_gramdiff(frame, ModelInfo(gm=gm, component_index=component, h_true=h), cfg, counters)
    nmse = nmse_ch(h, h_hat)
    print(f"variant={args.variant} snr_db={args.snr_db:g} n_d={n_d} nmse={nmse:.6g} "
          f"nmse_db={10 * np.log10(nmse):.3f} t_star={counters.t_star}")
    return 0


def _cmd_spectrum(args, config) -> int:
    if args.model:
        config["channel_model"]["kind"] = args.model
    model = model_from_config(config)
    stats = gram_spectrum_stats(model, args.samples, seed=args.seed)
    print(
        f"model={config['channel_model']['kind']} samples={stats['n_samples']} "
        f"mean_entropy={stats['mean_entropy']:.4f} var_entropy={stats['var_entropy']:.6f}"
    )
    return 0


def _cmd_goldens(args, config) -> int:
    denoiser = NeuralDenoiser(args.weights)
    sched = config["schedule"]
    t_max = int(sched["t_max"])
    if args.action == "emit":
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, 131)))
        records = []
        for k in range(5):
            t = max(1, round(t_max * (k + 1) / 5))
            ht = crandn(rng, denoiser.n_r, denoiser.n_t)
            records.append((t, ht, denoiser.epsilon_unchecked(ht, t, t_max)))
        write_goldens(args.out, records)
        print(f"wrote 5 golden vectors to {args.out}")
        return 0
    worst = 0.0
    for t, inp, expected in read_goldens(args.goldens):
        got = denoiser.epsilon_unchecked(inp, t, t_max)
        worst = max(worst, float(np.max(np.abs(got - expected))))
    ok = worst <= args.tol
    print(f"golden max-abs error {worst:.3e} (tol {args.tol:g}): {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_report(args) -> int:
    cells: dict[tuple, dict[str, str]] = {}
    variants: list[str] = []
    for path in args.csv:
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().strip().split(",")
            idx = {name: i for i, name in enumerate(header)}
            for line in f:
                parts = line.strip().split(",")
                if not parts or parts == [""]:
                    continue
                variant = parts[idx["variant"]]
                key = (float(parts[idx["snr_db"]]), int(parts[idx["n_d"]]))
                cells.setdefault(key, {})[variant] = parts[idx["nmse_mean"]]
                if variant not in variants:
                    variants.append(variant)
    width = max(12, max((len(v) for v in variants), default=12) + 2)
    print(f"{'snr_db':>8} {'n_d':>8} " + " ".join(f"{v:>{width}}" for v in variants))
    for (snr_db, n_d) in sorted(cells):
        row = cells[(snr_db, n_d)]
        print(
            f"{snr_db:>8g} {n_d:>8d} "
            + " ".join(f"{row.get(v, '-'):>{width}}" for v in variants)
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "gen-data":
            return _cmd_gen_data(args, config)
        if args.command == "fit-norm":
            return _cmd_fit_norm(args)
        if args.command == "sweep":
            return _cmd_sweep(args, config)
        if args.command == "estimate":
            return _cmd_estimate(args, config)
        if args.command == "spectrum":
            return _cmd_spectrum(args, config)
        if args.command == "goldens":
            return _cmd_goldens(args, config)
        if args.command == "report":
            return _cmd_report(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, DataFormatError, InvalidDimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GramDiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
