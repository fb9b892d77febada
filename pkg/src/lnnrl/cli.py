"""Command-line driver: ``run``, ``compare`` and ``summarize``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness


def _cmd_run(args) -> int:
    overrides = {"trace": args.trace} if args.trace else {}
    cfg = harness.load_config(args.config, **overrides)
    records = harness.run_experiment(cfg, greedy=args.greedy)
    text = harness.records_to_csv(records, cfg.window)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        ett = harness.episodes_to_threshold([r.reward for r in records], args.threshold, cfg.window)
        print(f"{cfg.method}: {len(records)} episodes, episodes to threshold "
              f"{'never' if ett is None else ett}, fallbacks {sum(r.fallbacks for r in records)}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_compare(args) -> int:
    configs = {m: harness.load_config(getattr(args, m)) for m in harness.METHODS}
    records, report = harness.compare(configs, args.seeds, args.threshold, args.window, args.workers)
    harness.write_outputs(records, report, args.out, args.window, args.gnuplot)
    sys.stdout.write(harness.report_text(report))
    return 0


def _cmd_summarize(args) -> int:
    src = Path(args.input)
    path = src / "curves.csv" if src.is_dir() else src
    if not path.exists():
        raise harness.ConfigError(f"{path}: no such file")
    report = harness.build_report(harness.read_csv(path), args.threshold, args.window)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        sys.stdout.write(harness.report_text(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lnnrl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def metric_args(p):
        p.add_argument("--threshold", type=float, default=harness.DEFAULT_THRESHOLD)
        p.add_argument("--window", type=int, default=harness.DEFAULT_WINDOW)

    run = sub.add_parser("run", help="train one agent and write its episode CSV")
    run.add_argument("--config", required=True, help="TOML key = value file")
    run.add_argument("--out", help="CSV path (default: stdout)")
    run.add_argument("--trace", help="write a per-step JSONL decision trace here")
    run.add_argument("--greedy", action="store_true", help="disable exploration")
    run.add_argument("--threshold", type=float, default=harness.DEFAULT_THRESHOLD)
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="run all three methods over several seeds")
    for m in harness.METHODS:
        cmp_.add_argument(f"--{m}", required=True, metavar="TOML")
    cmp_.add_argument("--seeds", type=int, default=5)
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.add_argument("--workers", type=int, default=None,
                      help=f"process count (default: ${harness.WORKERS_ENV} or 1)")
    cmp_.add_argument("--gnuplot", action="store_true", help="also write plot.gp")
    metric_args(cmp_)
    cmp_.set_defaults(func=_cmd_compare)

    summ = sub.add_parser("summarize", help="recompute the report from a curves CSV")
    summ.add_argument("--in", dest="input", required=True, help="compare output dir or CSV file")
    summ.add_argument("--json", action="store_true")
    metric_args(summ)
    summ.set_defaults(func=_cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, harness.ConfigMismatchError, OSError, ValueError) as err:
        print(f"lnnrl {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
