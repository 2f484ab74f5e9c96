"""Command-line interface: construct codes, run sweeps, collect statistics.

Subcommands:
  construct  build a CodeSpec by Monte-Carlo construction and write it to YAML
  simulate   run a seeded FER sweep from a config file, emit CSVs
  lambda     collect re-encoding-count statistics at chosen SNRs
  info       print a summary of a stored CodeSpec
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
import yaml

from .codec import load_spec, save_spec
from .construction import PRESETS, build_code_spec
from .modulation import second_moment
from .sim import SweepConfig, load_sweep_config, run_sweep


def _add_construct(sub):
    p = sub.add_parser("construct", help="build a code spec and write it to YAML")
    p.add_argument("--config", help="YAML file with construction parameters")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    p.add_argument("--kind", help="constellation kind (4-PAM or 8-ASK)")
    p.add_argument("--symbols", type=int, help="symbols per codeword (power of two)")
    p.add_argument("--info-bits", type=int, help="number of information positions K")
    p.add_argument("--crc-bits", type=int, help="CRC length p (within K)")
    p.add_argument("--shaping-bits", type=int, help="number of shaping positions")
    p.add_argument("--dsnr", type=float, help="design SNR in dB")
    p.add_argument("--kappa", type=float, help="dB offset for the shaping target SNR")
    p.add_argument("--encoder-list", type=int, help="encoder list size")
    p.add_argument("--crc-poly", help="generator bits MSB first, overrides the default")
    p.add_argument("--uniform", action="store_true", help="force a uniform target")
    p.add_argument("--trials", type=int, help="Monte-Carlo samples per estimate")
    p.add_argument("--seed", type=int, help="construction seed")
    p.add_argument("--name", help="label stored in the spec")
    p.add_argument("--out", required=True, help="output spec path")
    return p


_FLAG_TO_KEY = {
    "kind": "kind",
    "symbols": "n_symbols",
    "info_bits": "k",
    "crc_bits": "crc_degree",
    "shaping_bits": "n_dm",
    "dsnr": "dsnr_db",
    "kappa": "kappa_db",
    "encoder_list": "encoder_list",
    "crc_poly": "crc_poly",
    "trials": "trials",
    "seed": "seed",
    "name": "name",
}


def _cmd_construct(args) -> int:
    params: dict = {}
    if args.preset:
        params.update(PRESETS[args.preset])
        params.setdefault("name", args.preset)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            params.update(yaml.safe_load(fh) or {})
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag)
        if value is not None:
            params[key] = value
    if args.uniform:
        params["uniform"] = True
    missing = {"kind", "n_symbols", "k", "crc_degree", "n_dm", "dsnr_db",
               "kappa_db", "encoder_list"} - set(params)
    if missing:
        print(f"error: missing construction parameters: {sorted(missing)}", file=sys.stderr)
        return 2
    spec = build_code_spec(**params)
    save_spec(spec, args.out)
    print(f"wrote {args.out} (rate {spec.rate:g} bpcu, |F|={spec.frozen.size}, "
          f"|I|={spec.k}, |D|={spec.n_dm}, nu={spec.nu:.6g})")
    return 0


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run an FER sweep and write CSVs")
    p.add_argument("--config", required=True, help="sweep config YAML")
    p.add_argument("--spec", dest="spec_path", help="override code spec path")
    p.add_argument("--snr", dest="snr_db", type=float, nargs="+", help="override SNR grid (dB)")
    p.add_argument("--decoders", nargs="+", help="override decoder set")
    p.add_argument("--list", dest="decoder_list", type=int, help="decoder list size")
    p.add_argument("--min-errors", dest="min_frame_errors", type=int)
    p.add_argument("--max-trials", dest="max_trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output prefix for the CSV files")
    return p


def _cmd_simulate(args) -> int:
    overrides = {
        key: getattr(args, key)
        for key in ("spec_path", "snr_db", "decoders", "decoder_list",
                    "min_frame_errors", "max_trials", "seed", "workers", "out")
    }
    try:
        cfg = load_sweep_config(args.config, overrides)
        rows = run_sweep(cfg)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for r in rows:
        print(f"snr {r.snr_db:+.2f} dB  {r.decoder:9s} fer {r.fer:.3e} "
              f"({r.frame_errors}/{r.trials})")
    print(f"wrote {cfg.out}_fer.csv and {cfg.out}_lambda.csv")
    return 0


def _add_lambda(sub):
    p = sub.add_parser("lambda", help="re-encoding-count statistics at chosen SNRs")
    p.add_argument("--spec", required=True, help="code spec path")
    p.add_argument("--snr", type=float, nargs="+", required=True, help="SNR points (dB)")
    p.add_argument("--min-failures", type=int, default=100,
                   help="list-decoding failures to collect per point")
    p.add_argument("--max-trials", type=int, default=3_000_000)
    p.add_argument("--list", dest="decoder_list", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix for the CSV files")
    return p


def _cmd_lambda(args) -> int:
    cfg = SweepConfig(
        spec_path=args.spec,
        snr_db=list(args.snr),
        decoders=["standard", "reencode"],
        decoder_list=args.decoder_list,
        min_frame_errors=args.min_failures,
        max_trials=args.max_trials,
        seed=args.seed,
        workers=args.workers,
        stop_on="scl_failures",
        out=args.out,
    )
    try:
        rows = run_sweep(cfg)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for r in rows:
        if r.decoder != "reencode" or r.lambda_hist is None:
            continue
        fails = int(r.lambda_hist.sum())
        mean = "-" if r.mean_lambda_fail is None else f"{r.mean_lambda_fail:.2f}"
        print(f"snr {r.snr_db:+.2f} dB  failures {fails}  mean re-encodings {mean}")
    print(f"wrote {cfg.out}_fer.csv and {cfg.out}_lambda.csv")
    return 0


def _cmd_info(args) -> int:
    spec = load_spec(args.spec)
    c = spec.constellation
    print(f"name:          {spec.name or '(unnamed)'}")
    print(f"constellation: {c.kind} ({c.order} points, {c.levels} levels)")
    print(f"symbols:       {spec.n_symbols} (combined length {spec.combined_len})")
    print(f"rate:          {spec.rate:g} bpcu  (K={spec.k}, CRC p={spec.crc.degree})")
    print(f"sets:          |F|={spec.frozen.size} |I|={spec.k} |D|={spec.n_dm}")
    print(f"encoder list:  {spec.encoder_list}")
    print(f"design:        dSNR {spec.design_snr_db:g} dB, kappa {spec.kappa_db:g} dB, "
          f"nu {spec.nu:.6g}")
    print(f"target probs:  {np.array2string(spec.target.probs, precision=4)}")
    print(f"target:        H(X) = {spec.target.entropy_bits():.4f} bits, "
          f"E[X^2] = {second_moment(c, spec.target):.4f}")
    if spec.crc.degree:
        print(f"crc poly:      {spec.crc.poly_string()}")
    if spec.metadata:
        print(f"metadata:      {spec.metadata}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="polarshaping",
        description="Shaped multilevel polar codes: construction, simulation, statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_construct(sub)
    _add_simulate(sub)
    _add_lambda(sub)
    info = sub.add_parser("info", help="print a summary of a stored code spec")
    info.add_argument("--spec", required=True)

    args = parser.parse_args(argv)
    if args.command == "construct":
        return _cmd_construct(args)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "lambda":
        return _cmd_lambda(args)
    return _cmd_info(args)


if __name__ == "__main__":
    sys.exit(main())
