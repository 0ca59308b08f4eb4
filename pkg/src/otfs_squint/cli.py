"""Command-line entry point: ``otfs-squint <scenario> [options]``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import load_config, make_config
from .errors import ConfigurationError, ParameterError

EBN0_HELP = ("Eb/N0 convention: Eb/N0 = sigma_s^2 / (sigma^2 log2 Q) with unit symbol energy; "
             "pilot SNR is |x_p|^2 / sigma^2.")

DESCRIPTIONS = {
    "analyze": "dump one channel's coefficient grid (row_index, col_index, real, imag, modulus)",
    "sig-nmse": "DD-channel NMSE vs M of ignore-DSE and closed-form models (perfect path knowledge)",
    "sig-ber": "BER vs Eb/N0 with exact, ignore-DSE and approximate CSI (perfect path knowledge)",
    "est-nmse-snr": "estimation NMSE vs pilot SNR: OMP with DSE dictionary vs 3-sigma threshold",
    "est-nmse-m": "estimation NMSE vs M at fixed pilot SNR",
    "est-ber": "BER vs Eb/N0 with perfect, OMP and threshold CSI",
    "validate": "cross-model oracle suite; exits non-zero if any suite fails",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otfs-squint", description=__doc__, epilog=EBN0_HELP)
    sub = ap.add_subparsers(dest="scenario", required=True)
    for name, text in DESCRIPTIONS.items():
        sp = sub.add_parser(name, help=text, description=text, epilog=EBN0_HELP)
        sp.add_argument("--config", type=Path, help="YAML file with configuration keys")
        sp.add_argument("--seed", type=int, help="base seed (u64); trial seeds are seed XOR trial index")
        sp.add_argument("--trials", type=int, help="Monte-Carlo trials per sweep point")
        sp.add_argument("--out", type=Path, help="output CSV path (a .meta.json sidecar is written next to it)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
        if name == "analyze":
            sp.add_argument("--model", choices=["ignore-dse", "ideal-exact", "ideal-approx", "dd-closed", "rect"],
                            help="coefficient model to dump")
    return ap


def _resolve(args):
    overrides = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigurationError("--seed must be an unsigned 64-bit integer")
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if getattr(args, "model", None):
        overrides["model"] = args.model
    if args.config:
        cfg = load_config(args.config, args.scenario)
        for k, v in overrides.items():
            setattr(cfg, k, v)
        cfg.__post_init__()
    else:
        cfg = make_config(args.scenario, overrides)
    if args.out:
        cfg.output_path = str(args.out)
    return cfg


def _write_grid(grid, out):
    rows = [(i, j, z.real, z.imag, abs(z)) for (i, j), z in np.ndenumerate(grid)]
    if out is None:
        fh = sys.stdout
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        fh = open(out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["row_index", "col_index", "real", "imag", "modulus"])
    w.writerows([(i, j, repr(float(a)), repr(float(b)), repr(float(c))) for i, j, a, b, c in rows])
    if out is not None:
        fh.close()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
    except (ConfigurationError, ParameterError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.scenario == "analyze":
        _write_grid(experiments.analyze(cfg), cfg.output_path)
        return 0
    table = experiments.RUNNERS[args.scenario](cfg, workers=args.workers)
    if cfg.output_path:
        table.write(cfg.output_path)
    else:
        sys.stdout.write(table.to_csv())
    if args.scenario == "validate":
        for r in table.rows:
            if r["metric"] == "error":
                tol = table.value("tolerance", sweep_value=r["sweep_value"])
                print(f"{r['sweep_value']:28s} error={r['mean']:.3e} tol={tol:.0e}", file=sys.stderr)
        if not experiments.validate_passed(table):
            print("validate: FAILED", file=sys.stderr)
            return 1
        print("validate: all suites passed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
