"""``simplexfw`` command line: experiments, oracle benchmarks and summaries."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .oracle_bench import OracleBenchSpec, loglog_slope, run_oracle_bench, write_rows
from .runner import ExperimentSpec, experiment_ok, run_experiment
from .summarize import format_table, plot_series, summarize, write_plot_series

log = logging.getLogger("simplexfw")


def _experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    if args.out is not None:
        spec.out = args.out
    if spec.out is None:
        spec.out = str(Path(args.spec).with_suffix("")) + "_out"
    rows = run_experiment(spec, threads=args.threads)
    for r in rows:
        if r["error"]:
            log.error("%s rep %s failed: %s", r["solver"], r["rep"], r["error"])
        elif r["envelope_violations"] not in ("", 0):
            log.error("%s rep %s: %s envelope violations", r["solver"], r["rep"],
                      r["envelope_violations"])
    print(format_table(summarize(spec.out, spec.tol)))
    print(f"\ntraces and summary.csv written to {spec.out}")
    return 0 if experiment_ok(rows) else 1


def _oracle_bench(args) -> int:
    with open(args.spec) as fh:
        cfg = json.load(fh)
    if args.seed is not None:
        cfg["seed"] = args.seed
    spec = OracleBenchSpec.from_dict(cfg)
    rows = run_oracle_bench(spec)
    out = Path(args.out) if args.out else Path(args.spec).with_name(
        Path(args.spec).stem + "_oracles.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_rows(rows, out)
    print(f"{'oracle':<11} {'n':>9} {'mean_ns':>13} {'std_ns':>12}")
    for r in sorted(rows, key=lambda r: (r["oracle"], r["n"])):
        print(f"{r['oracle']:<11} {r['n']:>9} {r['mean_ns']:>13.1f} {r['std_ns']:>12.1f}")
    if len(spec.dims) > 1:
        for name in spec.oracles:
            if any(r["oracle"] == name for r in rows):
                print(f"log-log slope {name}: {loglog_slope(rows, name):.3f}")
    print(f"\nwritten to {out}")
    return 0


def _summarize(args) -> int:
    rows = summarize(args.dir, args.tol)
    print(format_table(rows))
    if args.plot_data:
        write_plot_series(plot_series(args.dir, args.max_points), args.plot_data)
        print(f"\nplot series written to {args.plot_data}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the seed in the JSON file")
    common.add_argument("--out", default=None, help="output directory or file")
    common.add_argument("--threads", type=int, default=1, help="worker processes for cells")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="simplexfw", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    e = sub.add_parser("experiment", parents=[common], help="run an experiment suite")
    e.add_argument("spec", help="experiment JSON file")
    e.set_defaults(func=_experiment)
    o = sub.add_parser("oracle-bench", parents=[common], help="time oracles across dimensions")
    o.add_argument("spec", help="oracle benchmark JSON file")
    o.set_defaults(func=_oracle_bench)
    s = sub.add_parser("summarize", parents=[common], help="tabulate a trace directory")
    s.add_argument("dir")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--plot-data", default=None, help="write down-sampled series to this CSV")
    s.add_argument("--max-points", type=int, default=200)
    s.set_defaults(func=_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
