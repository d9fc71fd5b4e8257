"""Command-line entry point ``flagdd``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from flagdd.ambiguity import full_grid
from flagdd.experiments import ConfigError, Study, load_config, run_study
from flagdd.sequences import CurtainParams, PeakKind, is_prime, make_flag


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.study:
        overrides["study"] = Study(args.study)
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    rows = run_study(cfg, out_dir=args.out)
    out = args.out or cfg.output_path
    print(f"{cfg.study.value}: {len(rows)} rows written to {out}")
    return 0


def _cmd_af(args) -> int:
    if args.peak:
        kind = PeakKind(args.peak)
    else:
        kind = PeakKind.WEIL_LEGENDRE if is_prime(args.len) and args.len > 2 else PeakKind.RANDOM_POLYPHASE
    flag = make_flag(CurtainParams.default(args.len, args.chirp_rate), kind, args.seed)
    full_grid(flag.samples, flag.samples).to_csv(args.out)
    print(f"{args.len}x{args.len} ambiguity grid written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flagdd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo study from a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--study", choices=[s.value for s in Study])
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out")
    run.set_defaults(func=_cmd_run)

    af = sub.add_parser("af", help="write the Flag preamble's ambiguity grid as CSV")
    af.add_argument("--len", type=int, default=257)
    af.add_argument("--out", default="heatmap.csv")
    af.add_argument("--chirp-rate", type=int, default=1)
    af.add_argument("--peak", choices=[k.value for k in PeakKind])
    af.add_argument("--seed", type=int, default=0)
    af.set_defaults(func=_cmd_af)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"flagdd: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
