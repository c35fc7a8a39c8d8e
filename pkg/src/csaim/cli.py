"""Command line: ``gen`` synthetic data, ``run`` one experiment, ``compare`` saved runs."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import ConfigError, load_config
from .dataset import DatasetError, generate, parse_dataset_spec, write_csv
from .harness import MODES, compare, load_reports, run_experiment


def _overrides(pairs):
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError([f"--set expects KEY=VALUE, got {pair!r}"])
        key, value = pair.split("=", 1)
        out[key.strip()] = value
    return out


def cmd_gen(args) -> int:
    spec = parse_dataset_spec(Path(args.spec).read_text(encoding="utf-8"))
    samples = generate(spec)
    write_csv(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_run(args) -> int:
    overrides = _overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = load_config(args.config, overrides)
    report = run_experiment(cfg, args.train, args.test, args.mode)
    out = report.save(args.out)
    print(
        f"{args.mode}: train {report.train_correct_ratio:.3f} test {report.test_correct_ratio:.3f} "
        f"memory cells {report.traces[-1].memory_cell_count} ({report.wall_time:.1f}s) -> {out}"
    )
    return 0


def cmd_compare(args) -> int:
    reports = load_reports(args.indir)
    print(compare(reports, args.repeats).format(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csaim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic CHD dataset")
    p.add_argument("--spec", required=True, help="dataset spec file (key=value)")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("--config", help="config file (key=value); defaults apply without one")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tabulate saved runs")
    p.add_argument("--in", dest="indir", required=True, help="directory searched for report.json")
    p.add_argument("--repeats", type=int)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
