"""Walk one tree variant through inserts and deletes, printing the shape.

Usage: python3 tree_walkthrough.py [variant]   (default fem)
"""

import sys

from cbst import VARIANT_NAMES, new_tree
from cbst.core import NEG_SENTINEL, POS_SENTINEL


def label(node):
    if node.key == POS_SENTINEL:
        return "+inf"
    if node.key == NEG_SENTINEL:
        return "-inf"
    return str(node.key)


def draw(node, indent=""):
    kind = "leaf" if node.is_leaf() else "router"
    print(f"{indent}{label(node)} ({kind})")
    if not node.is_leaf():
        draw(node.left, indent + "    ")
        draw(node.right, indent + "    ")


def main():
    variant = sys.argv[1] if len(sys.argv) > 1 else "fem"
    if variant not in VARIANT_NAMES:
        print(f"unknown variant {variant!r}; pick one of {sorted(VARIANT_NAMES)}")
        return 1

    tree = new_tree(variant)
    print(f"fresh {variant} tree: the immortal sentinel frame")
    draw(tree.root)

    print("\ninsert 20, 10, 30 (keys live only in leaves; routers grow above)")
    for key in (20, 10, 30):
        assert tree.insert(key)
    draw(tree.root)

    print("\ninsert 20 again ->", tree.insert(20), "(already present)")
    print("search 10 ->", tree.search(10))
    print("search 15 ->", tree.search(15))

    print("\ndelete 10 (the leaf and its router both disappear)")
    assert tree.delete(10)
    draw(tree.root)

    print("\ndelete 10 again ->", tree.delete(10), "(already gone)")
    print("contents:", tree.collect_leaf_keys())
    print("retries so far:", tree.retry_count(), "(single-threaded runs never retry)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
