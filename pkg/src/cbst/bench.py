"""Throughput benchmark driver: prefill, timed mixed workloads, sweeps.

A benchmark run prefills a fresh tree to half its key range, lets every
worker thread warm up for a fixed period, then measures how many operations
complete before a shared deadline. Operation kinds are drawn per thread from
a percentage mix (insert, delete, search) with keys uniform over the key
range, each thread on its own seeded generator so the op streams are
reproducible run to run even though interleavings are not.

Contention is reported as retries / (retries + ops_completed), where a retry
is one failed validation or lock pass inside a tree operation; a
single-threaded run can never retry, so its contention rate is exactly zero.

Records serialize to CSV and JSON with identical field names, one flat
record per run.
"""

from __future__ import annotations

import csv
import json
import os
import random
import threading
import time
from dataclasses import dataclass, replace

from .core import OpKind, draw_op
from .tree import VARIANT_NAMES, TreeBase, new_tree

# The two standard mixes, in (insert_pct, delete_pct, search_pct) order.
MIX_LOW = (9, 1, 90)
MIX_MID = (20, 10, 70)

CSV_FIELDS = (
    "variant",
    "threads",
    "key_range",
    "insert_pct",
    "delete_pct",
    "search_pct",
    "duration_ms",
    "ops_completed",
    "throughput_ops_s",
    "retries",
    "contention_rate",
    "wall_time_ms",
    "seed",
    "repeat",
)
CSV_HEADER = ",".join(CSV_FIELDS)


@dataclass(frozen=True)
class WorkloadSpec:
    """An operation mix plus the key range ("bucket") it runs over."""

    insert_pct: float
    delete_pct: float
    search_pct: float
    key_range: int

    def __post_init__(self):
        if min(self.insert_pct, self.delete_pct, self.search_pct) < 0:
            raise ValueError("mix percentages must be non-negative")
        if abs(self.insert_pct + self.delete_pct + self.search_pct - 100.0) > 1e-9:
            raise ValueError("mix percentages must sum to exactly 100")
        if self.key_range < 2:
            raise ValueError("key_range must be at least 2")


@dataclass(frozen=True)
class BenchConfig:
    """One benchmark point: a variant, a thread count, and a workload."""

    variant: str
    threads: int
    duration_ms: int
    workload: WorkloadSpec
    seed: int = 0
    warmup_ms: int = 500

    def __post_init__(self):
        if self.variant not in VARIANT_NAMES:
            raise ValueError(f"unknown variant: {self.variant!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.duration_ms <= 0:
            raise ValueError("duration_ms must be positive")
        if self.warmup_ms < 0:
            raise ValueError("warmup_ms must be non-negative")
        if self.variant == "seq" and self.threads != 1:
            raise ValueError("the seq variant is single-threaded only")


@dataclass(frozen=True)
class BenchRecord:
    """One measured run; field names match the CSV/JSON columns."""

    variant: str
    threads: int
    key_range: int
    insert_pct: float
    delete_pct: float
    search_pct: float
    duration_ms: int
    ops_completed: int
    throughput_ops_s: float
    retries: int
    contention_rate: float
    wall_time_ms: float
    seed: int
    repeat: int


def _thread_rng(seed: int, stream: int) -> random.Random:
    # Distinct deterministic stream per (seed, stream index).
    return random.Random(seed * 1_000_003 + stream)

# Stream index reserved for prefill so it never collides with a worker.
_PREFILL_STREAM = -1


def _maybe_pin(tid: int) -> None:
    # Round-robin the calling thread onto one CPU when CBST_PIN=1; silently
    # a no-op where affinity control is unavailable.
    if os.environ.get("CBST_PIN") != "1":
        return
    try:
        cpus = sorted(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return
    if not cpus:
        return
    try:
        os.sched_setaffinity(0, {cpus[tid % len(cpus)]})
    except OSError:
        pass


def prefill(tree: TreeBase, workload: WorkloadSpec, seed: int) -> int:
    """Insert uniform-random keys until the set holds key_range // 2 of
    them; returns the number of insert attempts (duplicates included)."""
    rng = _thread_rng(seed, _PREFILL_STREAM)
    target = workload.key_range // 2
    kr = workload.key_range
    insert = tree.insert
    randrange = rng.randrange
    size = 0
    attempts = 0
    while size < target:
        attempts += 1
        if insert(randrange(kr)):
            size += 1
    return attempts


def run_bench(config: BenchConfig, repeat: int = 0) -> BenchRecord:
    """Run one benchmark point and return its record.

    The tree is prefilled single-threaded, then all workers start behind a
    barrier, burn the warmup period uncounted, and count completed
    operations until the deadline. Retries are read off the tree's counter
    over the measured window only; wall time runs from the end of warmup to
    the last worker's finish.
    """
    wl = config.workload
    tree = new_tree(config.variant)
    prefill(tree, wl, config.seed)

    nt = config.threads
    barrier = threading.Barrier(nt + 1)
    counts = [0] * nt
    finishes = [0] * nt
    errors: list[BaseException] = []
    # Fixed before the barrier releases, read by workers after it.
    marks = {"warm_end": 0, "deadline": 0}

    ins_pct = wl.insert_pct
    del_pct = wl.delete_pct
    kr = wl.key_range
    now = time.monotonic_ns

    def worker(tid: int) -> None:
        try:
            _maybe_pin(tid)
            rng = _thread_rng(config.seed, tid)
            methods = {
                OpKind.INSERT: tree.insert,
                OpKind.DELETE: tree.delete,
                OpKind.SEARCH: tree.search,
            }
            barrier.wait()
            warm_end = marks["warm_end"]
            deadline = marks["deadline"]
            while now() < warm_end:
                op, key = draw_op(rng, ins_pct, del_pct, kr)
                methods[op](key)
            done = 0
            while now() < deadline:
                op, key = draw_op(rng, ins_pct, del_pct, kr)
                methods[op](key)
                done += 1
            counts[tid] = done
            finishes[tid] = now()
        except BaseException as exc:
            errors.append(exc)
            barrier.abort()

    threads = [
        threading.Thread(target=worker, args=(tid,), daemon=True, name=f"bench-{tid}")
        for tid in range(nt)
    ]
    for t in threads:
        t.start()
    start = now()
    marks["warm_end"] = start + config.warmup_ms * 1_000_000
    marks["deadline"] = marks["warm_end"] + config.duration_ms * 1_000_000
    barrier.wait()
    # Sleep out the warmup, snapshot the retry counter, sleep out the run.
    time.sleep(config.warmup_ms / 1000.0)
    retries_before = tree.retry_count()
    time.sleep(config.duration_ms / 1000.0)
    join_deadline = time.monotonic() + 30.0
    for t in threads:
        t.join(max(0.0, join_deadline - time.monotonic()))
    if errors:
        raise RuntimeError(f"benchmark worker failed: {errors[0]!r}") from errors[0]
    if any(t.is_alive() for t in threads):
        raise RuntimeError("benchmark workers failed to stop at the deadline")

    retries = tree.retry_count() - retries_before
    ops_completed = sum(counts)
    wall_ms = (max(finishes) - marks["warm_end"]) / 1e6
    throughput = ops_completed / (wall_ms / 1000.0) if wall_ms > 0 else 0.0
    attempts = retries + ops_completed
    return BenchRecord(
        variant=config.variant,
        threads=nt,
        key_range=kr,
        insert_pct=ins_pct,
        delete_pct=del_pct,
        search_pct=wl.search_pct,
        duration_ms=config.duration_ms,
        ops_completed=ops_completed,
        throughput_ops_s=throughput,
        retries=retries,
        contention_rate=retries / attempts if attempts else 0.0,
        wall_time_ms=wall_ms,
        seed=config.seed,
        repeat=repeat,
    )


def sweep(
    base_config: BenchConfig,
    thread_list: list[int],
    variant_list: list[str],
    repeats: int = 3,
) -> list[BenchRecord]:
    """Cross product of variants and thread counts, each point run
    ``repeats`` times; record order is deterministic (variant, threads,
    repeat).

    Every combination must be valid: pairing seq with a thread count above
    one raises, so run seq as its own single-thread sweep.
    """
    if not thread_list or not variant_list:
        raise ValueError("thread_list and variant_list must be non-empty")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    records = []
    for variant in variant_list:
        for threads in thread_list:
            config = replace(base_config, variant=variant, threads=threads)
            for rep in range(repeats):
                records.append(run_bench(config, repeat=rep))
    return records


# -- serialization -----------------------------------------------------------

_INT_FIELDS = {"threads", "key_range", "duration_ms", "ops_completed", "retries", "seed", "repeat"}
_FLOAT_FIELDS = {
    "insert_pct",
    "delete_pct",
    "search_pct",
    "throughput_ops_s",
    "contention_rate",
    "wall_time_ms",
}


def _record_from_row(row: dict) -> BenchRecord:
    kwargs = {}
    for name in CSV_FIELDS:
        value = row[name]
        if name in _INT_FIELDS:
            kwargs[name] = int(value)
        elif name in _FLOAT_FIELDS:
            kwargs[name] = float(value)
        else:
            kwargs[name] = value
    return BenchRecord(**kwargs)


def write_csv(records: list[BenchRecord], dest) -> None:
    """Write records as CSV to a path or text file object."""
    own = isinstance(dest, (str, os.PathLike))
    fp = open(dest, "w", newline="", encoding="ascii") if own else dest
    try:
        writer = csv.DictWriter(fp, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow({name: getattr(rec, name) for name in CSV_FIELDS})
    finally:
        if own:
            fp.close()


def read_csv(src) -> list[BenchRecord]:
    """Read records from a path or text file object."""
    own = isinstance(src, (str, os.PathLike))
    fp = open(src, "r", newline="", encoding="ascii") if own else src
    try:
        return [_record_from_row(row) for row in csv.DictReader(fp)]
    finally:
        if own:
            fp.close()


def write_json(records: list[BenchRecord], dest) -> None:
    """Write records as a JSON array of flat objects, same field names."""
    payload = [{name: getattr(rec, name) for name in CSV_FIELDS} for rec in records]
    own = isinstance(dest, (str, os.PathLike))
    fp = open(dest, "w", encoding="ascii") if own else dest
    try:
        json.dump(payload, fp, indent=2)
        fp.write("\n")
    finally:
        if own:
            fp.close()


def read_json(src) -> list[BenchRecord]:
    """Read records from a path or text file object."""
    own = isinstance(src, (str, os.PathLike))
    fp = open(src, "r", encoding="ascii") if own else src
    try:
        payload = json.load(fp)
    finally:
        if own:
            fp.close()
    return [BenchRecord(**obj) for obj in payload]
