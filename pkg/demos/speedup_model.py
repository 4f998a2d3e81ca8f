"""Exercise the speedup model: direct evaluation, the alpha(t) hardness
curve, and a prediction-vs-measurement table fed by a quick live benchmark.
"""

import sys

from cbst import (
    BenchConfig,
    ModelParams,
    WorkloadSpec,
    alpha_curve,
    amdahl_speedup,
    concurrent_speedup,
    predict_vs_measured,
    sweep,
)


def main():
    print("== the classic law vs the concurrent form ==")
    for procs in (1, 2, 4, 8, 16):
        classic = amdahl_speedup(0.95, procs)
        params = ModelParams(processors=procs, contention=0.2, alpha=0.9,
                             snapshot_work=0.25, control_work=0.25)
        concurrent = concurrent_speedup(params)
        print(f"  P={procs:<3} classic(p=0.95)={classic:5.2f}   "
              f"concurrent(c=0.2, alpha=0.9, overheads 0.25/0.25)={concurrent:5.2f}")

    print("\n== alpha(t) for three hardness levels (asymptote 0.9) ==")
    curves = {h: dict(alpha_curve(h, 0.9, t_max=4.0, step=1.0)) for h in (1.5, 2.0, 8.0)}
    print("  t     h=1.5   h=2.0   h=8.0")
    for t in (0.0, 1.0, 2.0, 3.0, 4.0):
        row = "   ".join(f"{curves[h][t]:.3f}" for h in (1.5, 2.0, 8.0))
        print(f"  {t:.1f}   {row}")
    print("  harder structures (larger h) reach their ceiling sooner")

    print("\n== prediction vs a quick live measurement ==")
    base = BenchConfig(
        variant="fem", threads=1, duration_ms=150,
        workload=WorkloadSpec(insert_pct=20, delete_pct=10, search_pct=70,
                              key_range=1000),
        seed=3, warmup_ms=50,
    )
    records = sweep(base, thread_list=[1, 2], variant_list=["fem"], repeats=3)
    template = ModelParams(processors=1, contention=0.0, alpha=1.0)
    print(f"  {'variant':<8} {'threads':>7} {'measured':>9} {'predicted':>9} {'ratio':>7} {'c':>7}")
    for row in predict_vs_measured(records, template):
        print(f"  {row.variant:<8} {row.threads:>7} {row.measured_speedup:>9.3f} "
              f"{row.predicted_speedup:>9.3f} {row.ratio:>7.3f} {row.c_fitted:>7.4f}")
    print("  (on a single hardware thread the measured 2-thread speedup stays"
          " near 1; the model sees only contention, not core counts)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
