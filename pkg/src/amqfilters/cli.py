"""Command-line benchmark harness.

Subcommands::

    amq-bench bench  --structure {qf,bf,bqf,cf} --inserts N [...]  # interleaved workload, CSV out
    amq-bench fp     --structure ... --queries N                   # false-positive-rate probe
    amq-bench io     --structure {bqf,cf} --inserts N              # insert-only I/O report

Exit codes: 0 success, 2 configuration error, 3 runtime or storage error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    ConfigError,
    WorkloadConfig,
    run_bench,
    run_fp_test,
    run_io_report,
    write_csv,
    write_io_csv,
)
from .errors import AmqError


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--structure", required=True, choices=["qf", "bf", "bqf", "cf"])
    sub.add_argument("--inserts", type=int, default=10000,
                     help="number of keys to insert")
    sub.add_argument("--q", type=int, default=16,
                     help="quotient bits (qf); bits per element (bf)")
    sub.add_argument("--r", type=int, default=12, help="remainder bits (qf)")
    sub.add_argument("--p", type=int, default=28,
                     help="fingerprint width (bqf/cf)")
    sub.add_argument("--fanout", type=int, default=2, help="level fanout (cf)")
    sub.add_argument("--buffer-slots", type=int, default=4096,
                     help="RAM filter slots for bqf/cf (power of two)")
    sub.add_argument("--max-load", type=float, default=0.75)
    sub.add_argument("--page-size", type=int, default=4096)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--checkpoint-pct", type=int, default=5)
    sub.add_argument("--lookups", type=int, default=2000,
                     help="lookups per checkpoint phase")
    sub.add_argument("--store", default="sim", help="'sim' or 'file:PATH'")
    sub.add_argument("--csv", default=None, help="write CSV here (default stdout)")


def _config(args: argparse.Namespace) -> WorkloadConfig:
    return WorkloadConfig(
        structure=args.structure,
        n_inserts=args.inserts,
        q=args.q,
        r=args.r,
        p=args.p,
        fanout=args.fanout,
        buffer_slots=args.buffer_slots,
        max_load=args.max_load,
        seed=args.seed,
        checkpoint_pct=args.checkpoint_pct,
        lookups_per_checkpoint=args.lookups,
        page_size=args.page_size,
        store=args.store,
    )


def _out(args):
    if args.csv:
        return open(args.csv, "w", newline="")
    return sys.stdout


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="amq-bench", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    bench_p = subs.add_parser("bench", help="interleaved insert/lookup workload")
    _add_common(bench_p)

    fp_p = subs.add_parser("fp", help="false-positive-rate measurement")
    _add_common(fp_p)
    fp_p.add_argument("--queries", type=int, default=100000,
                      help="fresh uniform queries to issue")

    io_p = subs.add_parser("io", help="insert-only I/O accounting report")
    _add_common(io_p)

    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "bench":
            records = run_bench(cfg)
            fh = _out(args)
            try:
                write_csv(records, fh)
            finally:
                if fh is not sys.stdout:
                    fh.close()
            last = records[-1]
            print(
                f"{cfg.structure}: {last.inserts_done} inserts, "
                f"final fp_rate={last.measured_fp_rate:.3e}, "
                f"page_writes={last.io.page_writes}",
                file=sys.stderr,
            )
        elif args.command == "fp":
            result = run_fp_test(cfg, args.queries)
            print(
                f"structure={cfg.structure} fill={result.fill_count} "
                f"queries={result.n_queries} fp_rate={result.fp_rate:.6e} "
                f"ci95=[{result.ci95[0]:.6e}, {result.ci95[1]:.6e}]"
            )
        else:
            report = run_io_report(cfg)
            fh = _out(args)
            try:
                write_io_csv(report, fh)
            finally:
                if fh is not sys.stdout:
                    fh.close()
            t = report.totals
            print(
                f"{cfg.structure}: reads={t.page_reads} writes={t.page_writes} "
                f"(sequential {t.sequential_writes}, random {t.random_writes})",
                file=sys.stderr,
            )
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AmqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
