"""Shared set semantics: the key domain, operation kinds, and a sequential oracle.

Every tree variant in this package implements the same abstract object, a set
of integer keys with three operations (search, insert, delete). This module
pins down that contract once so the trees, the verification harness, and the
benchmark driver all agree on what counts as a key and what each operation
returns.

Keys are signed 64-bit integers with the two extremes reserved: the trees use
them as immortal routing sentinels, so application code may only store keys
strictly between ``NEG_SENTINEL`` and ``POS_SENTINEL``.
"""

from __future__ import annotations

import enum

# Reserved routing sentinels. Application keys live in the open interval
# between them.
NEG_SENTINEL = -(2**63)
POS_SENTINEL = 2**63 - 1


class OpKind(enum.Enum):
    """The three set operations."""

    SEARCH = "SEARCH"
    INSERT = "INSERT"
    DELETE = "DELETE"


def is_application_key(key: object) -> bool:
    """True when ``key`` is an int strictly inside the sentinel interval."""
    return isinstance(key, int) and NEG_SENTINEL < key < POS_SENTINEL


def check_key(key: int) -> None:
    """Reject sentinels and anything that is not an in-range integer."""
    if not isinstance(key, int) or not NEG_SENTINEL < key < POS_SENTINEL:
        raise ValueError(
            f"key must be an integer strictly between {NEG_SENTINEL} and "
            f"{POS_SENTINEL}, got {key!r}"
        )


class SeqOracle:
    """Single-threaded reference set.

    The oracle defines the return-value contract every tree must match:
    search reports membership, insert returns True only when the key was
    absent, delete returns True only when the key was present. It is the
    ground truth for equivalence tests and for replaying histories.
    """

    __slots__ = ("_keys",)

    def __init__(self, initial=()):
        self._keys: set[int] = set()
        for key in initial:
            check_key(key)
            self._keys.add(key)

    def search(self, key: int) -> bool:
        check_key(key)
        return key in self._keys

    def insert(self, key: int) -> bool:
        check_key(key)
        if key in self._keys:
            return False
        self._keys.add(key)
        return True

    def delete(self, key: int) -> bool:
        check_key(key)
        if key in self._keys:
            self._keys.discard(key)
            return True
        return False

    def apply(self, op: OpKind, key: int) -> bool:
        """Apply one operation and return its result."""
        if op is OpKind.SEARCH:
            return self.search(key)
        if op is OpKind.INSERT:
            return self.insert(key)
        if op is OpKind.DELETE:
            return self.delete(key)
        raise TypeError(f"unknown operation kind: {op!r}")

    def contents(self) -> list[int]:
        """Keys currently in the set, ascending."""
        return sorted(self._keys)

    def __contains__(self, key: int) -> bool:
        return key in self._keys

    def __len__(self) -> int:
        return len(self._keys)


def oracle_apply(oracle: SeqOracle, op: OpKind, key: int) -> bool:
    """Function form of :meth:`SeqOracle.apply`."""
    return oracle.apply(op, key)


def draw_op(rng, insert_pct: float, delete_pct: float, key_range: int):
    """Draw one (operation, key) pair from a percentage mix.

    Consumes exactly two values from ``rng`` in a fixed order (mix roll,
    then key), so identical seeds replay identical operation streams. The
    remaining probability mass after insert and delete goes to search.
    """
    r = rng.random() * 100.0
    key = rng.randrange(key_range)
    if r < insert_pct:
        return OpKind.INSERT, key
    if r < insert_pct + delete_pct:
        return OpKind.DELETE, key
    return OpKind.SEARCH, key
