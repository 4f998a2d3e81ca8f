"""Concurrent external binary search trees with pluggable locking.

Six set implementations over one external-BST layout (seq, coarse, fn, fe,
fem, tn), a verification harness (structural invariants, linearizability,
randomized stress with deadlock detection), a throughput benchmark driver,
and an analytical speedup model relating contention to scaling.
"""

from .bench import (
    MIX_LOW,
    MIX_MID,
    BenchConfig,
    BenchRecord,
    WorkloadSpec,
    prefill,
    read_csv,
    read_json,
    run_bench,
    sweep,
    write_csv,
    write_json,
)
from .core import (
    NEG_SENTINEL,
    POS_SENTINEL,
    OpKind,
    SeqOracle,
    check_key,
    draw_op,
    is_application_key,
    oracle_apply,
)
from .locks import FlagLock, FlagMarkWord, TicketLock
from .model import (
    ComparisonRow,
    ModelDomainError,
    ModelInputError,
    ModelParams,
    alpha_at,
    alpha_curve,
    amdahl_speedup,
    concurrent_speedup,
    effective_parallelism,
    fit_contention,
    parallel_workload,
    predict_vs_measured,
    validate,
    write_comparison_csv,
)
from .tree import (
    CONCURRENT_VARIANTS,
    RECLAMATION_POLICY,
    VARIANT_NAMES,
    Node,
    Snapshot,
    TreeBase,
    new_tree,
)
from .verify import (
    DeadlockSuspectedError,
    Event,
    History,
    HistoryFormatError,
    HistoryTooLargeError,
    IncompleteHistoryError,
    InvariantReport,
    Operation,
    StressConfig,
    brute_force_linearizable,
    check_balance,
    check_linearizable,
    check_structure,
    run_stress,
)

__version__ = "0.1.0"

__all__ = [
    "BenchConfig",
    "BenchRecord",
    "ComparisonRow",
    "CONCURRENT_VARIANTS",
    "DeadlockSuspectedError",
    "Event",
    "FlagLock",
    "FlagMarkWord",
    "History",
    "HistoryFormatError",
    "HistoryTooLargeError",
    "IncompleteHistoryError",
    "InvariantReport",
    "MIX_LOW",
    "MIX_MID",
    "ModelDomainError",
    "ModelInputError",
    "ModelParams",
    "NEG_SENTINEL",
    "Node",
    "OpKind",
    "Operation",
    "POS_SENTINEL",
    "RECLAMATION_POLICY",
    "SeqOracle",
    "Snapshot",
    "StressConfig",
    "TicketLock",
    "TreeBase",
    "VARIANT_NAMES",
    "WorkloadSpec",
    "alpha_at",
    "alpha_curve",
    "amdahl_speedup",
    "brute_force_linearizable",
    "check_balance",
    "check_key",
    "check_linearizable",
    "check_structure",
    "concurrent_speedup",
    "draw_op",
    "effective_parallelism",
    "fit_contention",
    "is_application_key",
    "new_tree",
    "oracle_apply",
    "parallel_workload",
    "predict_vs_measured",
    "prefill",
    "read_csv",
    "read_json",
    "run_bench",
    "run_stress",
    "sweep",
    "validate",
    "write_comparison_csv",
    "write_csv",
    "write_json",
]
