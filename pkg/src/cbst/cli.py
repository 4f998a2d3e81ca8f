"""Command-line front end: bench, check, and model subcommands.

Wires the benchmark driver, the verification harness, and the speedup model
into scriptable experiments. Exit codes follow the usual CI contract: 0 when
everything passed, 1 when a run or check failed, 2 for usage errors (bad
flags or flag combinations, refused oversized replays).

Machine-readable output goes to --out when given, otherwise to stdout; the
human summary table is printed only when --out keeps stdout free.
"""

from __future__ import annotations

import argparse
import statistics
import sys

from . import bench as bench_mod
from . import model as model_mod
from .tree import CONCURRENT_VARIANTS, VARIANT_NAMES
from .verify import (
    History,
    HistoryFormatError,
    HistoryTooLargeError,
    StressConfig,
    check_balance,
    check_linearizable,
    check_structure,
    run_stress,
)

_PRESETS = {
    "paper-low": bench_mod.MIX_LOW,
    "paper-mid": bench_mod.MIX_MID,
}
_PRESET_BUCKETS = [10000, 100000]
_PRESET_THREADS = [1, 2, 4, 8, 16, 32]


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must be non-empty")
    return values


def _mix(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("mix must be three numbers: insert,delete,search")
    try:
        return tuple(float(part) for part in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mix values must be numeric, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbst",
        description="Concurrent BST benchmarks, correctness checks, and the speedup model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run throughput benchmarks")
    b.add_argument("--variant", choices=VARIANT_NAMES, default=None,
                   help="tree variant to benchmark (default fem, or the preset grid)")
    b.add_argument("--threads", type=_int_list, default=None, metavar="N,N,...",
                   help="thread counts to sweep (default 1)")
    b.add_argument("--duration-ms", type=int, default=1000, metavar="MS")
    b.add_argument("--key-range", type=int, default=None, metavar="N",
                   help="key range aka bucket size (default 10000)")
    b.add_argument("--mix", type=_mix, default=None, metavar="I,D,S",
                   help="insert,delete,search percentages (default 20,10,70)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--warmup-ms", type=int, default=500, metavar="MS")
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.add_argument("--out", default=None, metavar="PATH")
    b.add_argument("--preset", choices=sorted(_PRESETS), default=None,
                   help="expand to the published experiment grid for this mix")

    c = sub.add_parser("check", help="run correctness checks")
    c.add_argument("--mode", choices=("invariants", "linearizability", "replay"), required=True)
    c.add_argument("--variant", choices=VARIANT_NAMES, default="fem")
    c.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: 8 for invariants, 3 for linearizability)")
    c.add_argument("--ops", type=int, default=5, help="operations per thread (linearizability)")
    c.add_argument("--iterations", type=int, default=100,
                   help="number of randomized histories (linearizability)")
    c.add_argument("--duration-ms", type=int, default=1000, metavar="MS",
                   help="stress run length (invariants)")
    c.add_argument("--key-range", type=int, default=None,
                   help="key range (default: 10000 for invariants, 4 for linearizability)")
    c.add_argument("--mix", type=_mix, default=(20.0, 10.0, 70.0), metavar="I,D,S")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--timeout-s", type=float, default=30.0)
    c.add_argument("--max-ops", type=int, default=20,
                   help="linearizability checker bound per history")
    c.add_argument("--history", default=None, metavar="PATH", help="history file (replay)")
    c.add_argument("--out", default=None, metavar="PATH")

    m = sub.add_parser("model", help="evaluate the speedup model")
    action = m.add_mutually_exclusive_group(required=True)
    action.add_argument("--eval", action="store_true", help="print concurrent speedup")
    action.add_argument("--curve-alpha", action="store_true", help="emit the alpha(t) curve")
    action.add_argument("--compare", action="store_true",
                        help="compare predictions against benchmark records")
    m.add_argument("--P", type=int, default=None, help="processor/thread count")
    m.add_argument("--c", type=float, default=None, help="contention rate")
    m.add_argument("--alpha", type=float, default=1.0)
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--ws-ratio", type=float, default=0.0, help="w_snapshot / w_p")
    m.add_argument("--wc-ratio", type=float, default=0.0, help="w_control / w_p")
    m.add_argument("--h", type=float, default=None, help="structure hardness, > 1")
    m.add_argument("--asymptote", type=float, default=None, help="alpha(t) asymptote")
    m.add_argument("--t-max", type=float, default=10.0)
    m.add_argument("--step", type=float, default=0.5)
    m.add_argument("--records", default=None, metavar="PATH", help="bench records (compare)")
    m.add_argument("--out", default=None, metavar="PATH")
    return parser


# -- bench -------------------------------------------------------------------


def _bench_grid(args, parser):
    """Resolve flags and preset into (variants, thread lists, buckets, mix)."""
    preset_mix = _PRESETS.get(args.preset) if args.preset else None
    mix = args.mix or preset_mix or (20.0, 10.0, 70.0)
    buckets = [args.key_range] if args.key_range else (
        _PRESET_BUCKETS if args.preset else [10000]
    )
    if args.variant:
        variants = [args.variant]
    elif args.preset:
        variants = list(CONCURRENT_VARIANTS) + ["seq"]
    else:
        variants = ["fem"]
    threads = args.threads or (_PRESET_THREADS if args.preset else [1])
    explicit_threads = args.threads is not None
    if "seq" in variants and explicit_threads and threads != [1]:
        parser.error("the seq variant is single-threaded; use --threads 1")
    return variants, threads, buckets, mix


def cmd_bench(args, parser) -> int:
    variants, threads, buckets, mix = _bench_grid(args, parser)
    records = []
    for key_range in buckets:
        workload = bench_mod.WorkloadSpec(mix[0], mix[1], mix[2], key_range)
        base = bench_mod.BenchConfig(
            variant="fem",
            threads=1,
            duration_ms=args.duration_ms,
            workload=workload,
            seed=args.seed,
            warmup_ms=args.warmup_ms,
        )
        for variant in variants:
            variant_threads = [1] if variant == "seq" else threads
            records.extend(
                bench_mod.sweep(base, variant_threads, [variant], repeats=args.repeats)
            )

    if args.out:
        if args.format == "json":
            bench_mod.write_json(records, args.out)
        else:
            bench_mod.write_csv(records, args.out)
        _print_bench_summary(records)
        print(f"{len(records)} records written to {args.out}")
    else:
        if args.format == "json":
            bench_mod.write_json(records, sys.stdout)
        else:
            bench_mod.write_csv(records, sys.stdout)
    return 0


def _print_bench_summary(records) -> None:
    groups: dict[tuple, list[float]] = {}
    conts: dict[tuple, list[float]] = {}
    for rec in records:
        key = (rec.variant, rec.threads, rec.key_range)
        groups.setdefault(key, []).append(rec.throughput_ops_s)
        conts.setdefault(key, []).append(rec.contention_rate)
    print(f"{'variant':<8} {'threads':>7} {'key_range':>9} {'median ops/s':>14} {'contention':>10}")
    for key in sorted(groups):
        variant, threads, key_range = key
        thr = statistics.median(groups[key])
        con = statistics.median(conts[key])
        print(f"{variant:<8} {threads:>7} {key_range:>9} {thr:>14,.0f} {con:>10.4f}")


# -- check -------------------------------------------------------------------


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="ascii") as fp:
        fp.write("\n".join(lines))
        fp.write("\n")


def cmd_check(args, parser) -> int:
    if args.mode == "replay":
        if not args.history:
            parser.error("--mode replay requires --history")
        try:
            history = History.load(args.history)
        except (OSError, HistoryFormatError) as exc:
            print(f"cannot load history: {exc}", file=sys.stderr)
            return 1
        try:
            ok = check_linearizable(history, max_ops=args.max_ops)
        except HistoryTooLargeError as exc:
            print(f"refusing replay: {exc}", file=sys.stderr)
            return 2
        print(f"linearizable: {'true' if ok else 'false'}")
        return 0 if ok else 1

    if args.mode == "invariants":
        config = StressConfig(
            variant=args.variant,
            threads=args.threads if args.threads is not None else 8,
            key_range=args.key_range if args.key_range is not None else 10000,
            insert_pct=args.mix[0],
            delete_pct=args.mix[1],
            search_pct=args.mix[2],
            seed=args.seed,
            duration_ms=args.duration_ms,
            timeout_s=args.timeout_s,
        )
        history, tree = run_stress(config)
        report = check_structure(tree)
        balance_violations = check_balance(history, tree.collect_leaf_keys())
        checks = [
            ("order", report.order_ok),
            ("shape", report.shape_ok),
            ("sentinels", report.sentinels_ok),
            ("balance", not balance_violations),
        ]
        for name, ok in checks:
            print(f"{name}: {'ok' if ok else 'VIOLATED'}")
        if args.out:
            _write_lines(args.out, ["check,ok"] + [f"{n},{str(ok).lower()}" for n, ok in checks])
        failures = report.violations + balance_violations
        if failures:
            print(f"first violation: {failures[0]}", file=sys.stderr)
            return 1
        return 0

    # linearizability
    threads = args.threads if args.threads is not None else 3
    key_range = args.key_range if args.key_range is not None else 4
    failures = 0
    rows = ["iteration,ops,linearizable"]
    first_bad: History | None = None
    for i in range(args.iterations):
        config = StressConfig(
            variant=args.variant,
            threads=threads,
            key_range=key_range,
            insert_pct=args.mix[0],
            delete_pct=args.mix[1],
            search_pct=args.mix[2],
            seed=args.seed + i,
            ops_per_thread=args.ops,
            timeout_s=args.timeout_s,
        )
        history, _ = run_stress(config)
        ok = check_linearizable(history, max_ops=args.max_ops)
        rows.append(f"{i},{len(history) // 2},{str(ok).lower()}")
        if not ok:
            failures += 1
            if first_bad is None:
                first_bad = history
    print(f"{args.iterations} histories checked, {failures} non-linearizable")
    if args.out:
        _write_lines(args.out, rows)
    if failures:
        print("first non-linearizable history:", file=sys.stderr)
        for line in first_bad.to_lines():
            print(f"  {line}", file=sys.stderr)
        return 1
    return 0


# -- model -------------------------------------------------------------------


def cmd_model(args, parser) -> int:
    if args.eval:
        if args.P is None or args.c is None:
            parser.error("--eval requires --P and --c")
        params = model_mod.ModelParams(
            processors=args.P,
            contention=args.c,
            alpha=args.alpha,
            beta=args.beta,
            parallel_work=1.0,
            snapshot_work=args.ws_ratio,
            control_work=args.wc_ratio,
        )
        try:
            value = model_mod.concurrent_speedup(params)
        except model_mod.ModelDomainError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        print(f"{value:g}")
        return 0

    if args.curve_alpha:
        if args.h is None or args.asymptote is None:
            parser.error("--curve-alpha requires --h and --asymptote")
        try:
            points = model_mod.alpha_curve(args.h, args.asymptote, args.t_max, args.step)
        except model_mod.ModelDomainError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        lines = ["t,alpha"] + [f"{t:g},{alpha:.10g}" for t, alpha in points]
        if args.out:
            _write_lines(args.out, lines)
        else:
            print("\n".join(lines))
        return 0

    # compare
    if not args.records:
        parser.error("--compare requires --records")
    try:
        if args.records.endswith(".json"):
            records = bench_mod.read_json(args.records)
        else:
            records = bench_mod.read_csv(args.records)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot load records: {exc}", file=sys.stderr)
        return 1
    template = model_mod.ModelParams(
        processors=1,
        contention=0.0,
        alpha=args.alpha,
        beta=args.beta,
        parallel_work=1.0,
        snapshot_work=args.ws_ratio,
        control_work=args.wc_ratio,
    )
    try:
        rows = model_mod.predict_vs_measured(records, template)
    except (model_mod.ModelInputError, model_mod.ModelDomainError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.out:
        model_mod.write_comparison_csv(rows, args.out)
        print(f"{'variant':<8} {'threads':>7} {'measured':>9} {'predicted':>9} {'ratio':>7}")
        for row in rows:
            print(
                f"{row.variant:<8} {row.threads:>7} {row.measured_speedup:>9.3f} "
                f"{row.predicted_speedup:>9.3f} {row.ratio:>7.3f}"
            )
    else:
        model_mod.write_comparison_csv(rows, sys.stdout)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            return cmd_bench(args, parser)
        if args.command == "check":
            return cmd_check(args, parser)
        return cmd_model(args, parser)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
