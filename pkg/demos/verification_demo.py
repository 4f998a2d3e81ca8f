"""Record a small concurrent run, then put every checker through its paces:
linearizability on real and doctored histories, structure checks on healthy
and corrupted trees, and per-key balance accounting.
"""

import sys

from cbst import (
    History,
    StressConfig,
    check_balance,
    check_linearizable,
    check_structure,
    run_stress,
)
from cbst.tree import Node, new_tree


def main():
    print("== recorded stress run ==")
    config = StressConfig(variant="fem", threads=3, key_range=4,
                          insert_pct=30, delete_pct=20, search_pct=50,
                          seed=7, ops_per_thread=5)
    history, tree = run_stress(config)
    print(f"{len(history.operations())} operations across {config.threads} threads:")
    for line in history.to_lines()[:6]:
        print("   ", line)
    print("    ...")
    print("linearizable:", check_linearizable(history))
    print("structure ok:", check_structure(tree).ok)
    print("balance violations:", check_balance(history, tree.collect_leaf_keys()))

    print("\n== doctored history ==")
    # an insert completes, then a later search misses the key anyway
    lines = [
        "0 0 INVOKE INSERT 5 1000",
        "0 1 RESPOND INSERT 5 true 2000",
        "1 0 INVOKE SEARCH 5 3000",
        "1 1 RESPOND SEARCH 5 false 4000",
    ]
    bad = History.from_lines(lines)
    for line in lines:
        print("   ", line)
    print("linearizable:", check_linearizable(bad))

    print("\n== corrupted tree ==")
    t = new_tree("seq")
    for key in (10, 20, 30):
        t.insert(key)
    # swap a router's children so leaf order breaks
    router = t.root.left
    router.left, router.right = router.right, router.left
    report = check_structure(t)
    print("structure ok:", report.ok)
    for violation in report.violations:
        print("   ", violation)

    print("\n== orphaned key ==")
    t2 = new_tree("seq")
    t2.insert(42)
    empty = History([])
    print("final contents", t2.collect_leaf_keys(), "with no recorded ops:")
    for violation in check_balance(empty, t2.collect_leaf_keys()):
        print("   ", violation)
    return 0


if __name__ == "__main__":
    sys.exit(main())
