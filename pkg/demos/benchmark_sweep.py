"""Run a miniature throughput sweep and leave a CSV behind.

Short durations keep this demo quick; real measurements want the defaults
(1000 ms runs, 500 ms warmup) and an otherwise idle machine.
"""

import statistics
import sys

from cbst import BenchConfig, WorkloadSpec, sweep, write_csv

OUT = "demo_sweep.csv"


def main():
    base = BenchConfig(
        variant="fem",
        threads=1,
        duration_ms=150,
        workload=WorkloadSpec(insert_pct=20, delete_pct=10, search_pct=70,
                              key_range=1000),
        seed=1,
        warmup_ms=50,
    )
    variants = ["coarse", "fem", "tn"]
    threads = [1, 2]
    print(f"sweeping {variants} x {threads} threads, 3 repeats each...")
    records = sweep(base, thread_list=threads, variant_list=variants, repeats=3)

    groups = {}
    for rec in records:
        groups.setdefault((rec.variant, rec.threads), []).append(rec)
    print(f"\n{'variant':<8} {'threads':>7} {'median ops/s':>13} {'contention':>10}")
    for (variant, nthreads), recs in sorted(groups.items()):
        thr = statistics.median(r.throughput_ops_s for r in recs)
        con = statistics.median(r.contention_rate for r in recs)
        print(f"{variant:<8} {nthreads:>7} {thr:>13,.0f} {con:>10.4f}")

    write_csv(records, OUT)
    print(f"\n{len(records)} records written to {OUT}")
    print("plot-ready columns: variant, threads, throughput_ops_s, contention_rate")
    return 0


if __name__ == "__main__":
    sys.exit(main())
