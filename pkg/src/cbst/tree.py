"""External binary search trees under six locking disciplines.

All variants share one data layout: keys live only in leaves, and every
internal node is a binary router with exactly two children. A search for k
goes left when k < node.key and right otherwise, so ties route right and a
router's key equals the smallest key reachable in its right subtree.

Every tree is born with three immortal nodes: a root router keyed with the
positive sentinel, a negative-sentinel leaf on its left and a
positive-sentinel leaf on its right. Application keys are confined strictly
between the sentinels, so a descent always ends in a leaf and the root is
never replaced.

Writers never modify a node's key. An insert builds a fresh router above the
reached leaf and swings one child pointer; a delete swings the grandparent's
child pointer to the removed leaf's sibling. Because readers only follow
child pointers, searches run without any synchronisation in every variant
except the coarse one.

Variant summary::

    name    locks                          validation after locking
    ----    ----                           ----
    seq     none (single thread only)      none
    coarse  one tree-wide mutex            none
    fn      flags on ppred/pred/curr       child links re-checked
    fe      flags on pred/curr             fresh root-to-leaf re-traversal
    fem     flag+mark words on pred/curr   mark checks plus link re-checks
    tn      tickets on internal nodes      version stamps from the descent

Nodes unlinked by a delete are never recycled in place: fn and fem leave
their flags held (fem additionally leaves them marked), and tn keeps the
retired parent's ticket, so a stale operation that still points at them
fails its lock or validation step and retries from the root. The unlinked
nodes themselves stay readable for as long as any in-flight traversal can
reach them; reclamation is left to reference counting, recorded here as
``RECLAMATION_POLICY``.
"""

from __future__ import annotations

import threading
import time
from typing import NamedTuple

from .core import NEG_SENTINEL, POS_SENTINEL, check_key
from .locks import FlagLock, FlagMarkWord, TicketLock

RECLAMATION_POLICY = "refcount"


class Node:
    """One tree node. Leaves have both children None; key never changes."""

    __slots__ = ("key", "left", "right", "lock")

    def __init__(self, key, left=None, right=None, lock=None):
        self.key = key
        self.left = left
        self.right = right
        self.lock = lock

    def is_leaf(self) -> bool:
        return self.left is None

    def __repr__(self):
        kind = "leaf" if self.left is None else "router"
        return f"<{kind} {self.key}>"


class Snapshot(NamedTuple):
    """The positions a descent for some key passed through.

    ppred is the grandparent of the reached leaf (None when the leaf hangs
    directly off the root), pright/right record which child pointer was
    followed out of ppred/pred, and curr is the leaf where the descent
    stopped.
    """

    ppred: Node | None
    pright: bool
    pred: Node
    right: bool
    curr: Node


class TnSnapshot(NamedTuple):
    """A descent snapshot extended with version stamps for tn validation.

    Each stamp was sampled before the corresponding node's child pointer was
    read, so an unchanged stamp under a held ticket proves the pointer is
    still current.
    """

    ppred: Node | None
    pright: bool
    pred: Node
    right: bool
    curr: Node
    pred_stamp: int
    ppred_stamp: int


def _no_lock():
    return None


class TreeBase:
    """Shared structure, descent, and bookkeeping for all variants."""

    variant = "base"
    _fresh_lock = staticmethod(_no_lock)

    def __init__(self):
        mk = self._fresh_lock
        self._neg_leaf = Node(NEG_SENTINEL, None, None, mk())
        self._pos_leaf = Node(POS_SENTINEL, None, None, mk())
        self.root = Node(POS_SENTINEL, self._neg_leaf, self._pos_leaf, mk())
        self._retries = 0
        self._retry_mu = threading.Lock()

    # -- descent ---------------------------------------------------------

    def _find(self, key):
        """Descend to the leaf where ``key`` belongs; no locks, no checks."""
        ppred = None
        pright = False
        pred = None
        right = False
        curr = self.root
        left = curr.left
        while left is not None:
            ppred = pred
            pright = right
            pred = curr
            if key < curr.key:
                right = False
                curr = left
            else:
                right = True
                curr = curr.right
            left = curr.left
        return Snapshot(ppred, pright, pred, right, curr)

    def find(self, key: int) -> Snapshot:
        """Public descent: validates the key, returns the full snapshot."""
        check_key(key)
        return self._find(key)

    def search(self, key: int) -> bool:
        """Optimistic membership test; never acquires a lock."""
        check_key(key)
        return self._find(key).curr.key == key

    # -- mutation helpers -------------------------------------------------

    def _router_above(self, key, curr):
        """Build the router that replaces leaf ``curr`` when inserting key.

        The router's key is the larger of the two, so the smaller key hangs
        on the left and a search for either key routes correctly.
        """
        mk = self._fresh_lock
        if key < curr.key:
            return Node(curr.key, Node(key, None, None, mk()), curr, mk())
        return Node(key, curr, Node(key, None, None, mk()), mk())

    def _count_retry(self):
        with self._retry_mu:
            self._retries += 1

    def retry_count(self) -> int:
        """Total failed validation/lock passes since construction."""
        return self._retries

    # -- quiescent inspection ---------------------------------------------

    def collect_leaf_keys(self) -> list[int]:
        """In-order leaf keys, sentinels excluded. Quiescent trees only."""
        out = []
        stack = []
        node = self.root
        while stack or node is not None:
            while node is not None:
                stack.append(node)
                node = node.left
            node = stack.pop()
            if node.left is None:
                key = node.key
                if NEG_SENTINEL < key < POS_SENTINEL:
                    out.append(key)
            node = node.right
        return out

    def __repr__(self):
        return f"<{type(self).__name__} variant={self.variant!r}>"


class SeqTree(TreeBase):
    """Unsynchronised baseline; correct only under a single thread."""

    variant = "seq"

    def insert(self, key: int) -> bool:
        check_key(key)
        _, _, pred, right, curr = self._find(key)
        if curr.key == key:
            return False
        router = self._router_above(key, curr)
        if right:
            pred.right = router
        else:
            pred.left = router
        return True

    def delete(self, key: int) -> bool:
        check_key(key)
        ppred, pright, pred, right, curr = self._find(key)
        if curr.key != key:
            return False
        sibling = pred.left if right else pred.right
        if pright:
            ppred.right = sibling
        else:
            ppred.left = sibling
        return True


class CoarseTree(SeqTree):
    """One tree-wide mutex around every operation, searches included."""

    variant = "coarse"

    def __init__(self):
        super().__init__()
        self._big = threading.Lock()

    def search(self, key: int) -> bool:
        with self._big:
            return SeqTree.search(self, key)

    def insert(self, key: int) -> bool:
        with self._big:
            return SeqTree.insert(self, key)

    def delete(self, key: int) -> bool:
        with self._big:
            return SeqTree.delete(self, key)


class FnTree(TreeBase):
    """Flag locking on every snapshot node.

    insert locks pred then curr; delete locks ppred, pred, then curr, always
    top-down so lock chains run toward the leaves and cannot cycle. With all
    touched nodes held, validation is a pair of child-link re-checks, and the
    sibling can be read directly because nothing can move it while pred's
    flag is held. Unlinked nodes keep their flags forever, so a lockable node
    is always still reachable.
    """

    variant = "fn"
    _fresh_lock = staticmethod(FlagLock)

    def insert(self, key: int) -> bool:
        check_key(key)
        while True:
            _, _, pred, right, curr = self._find(key)
            if curr.key == key:
                return False
            plock = pred.lock
            if not plock.try_acquire():
                self._count_retry()
                continue
            clock = curr.lock
            if not clock.try_acquire():
                plock.release()
                self._count_retry()
                continue
            if (pred.right if right else pred.left) is not curr:
                clock.release()
                plock.release()
                self._count_retry()
                continue
            router = self._router_above(key, curr)
            if right:
                pred.right = router
            else:
                pred.left = router
            clock.release()
            plock.release()
            return True

    def delete(self, key: int) -> bool:
        check_key(key)
        while True:
            ppred, pright, pred, right, curr = self._find(key)
            if curr.key != key:
                return False
            glock = ppred.lock
            if not glock.try_acquire():
                self._count_retry()
                continue
            plock = pred.lock
            if not plock.try_acquire():
                glock.release()
                self._count_retry()
                continue
            clock = curr.lock
            if not clock.try_acquire():
                plock.release()
                glock.release()
                self._count_retry()
                continue
            if (
                (ppred.right if pright else ppred.left) is not pred
                or (pred.right if right else pred.left) is not curr
            ):
                clock.release()
                plock.release()
                glock.release()
                self._count_retry()
                continue
            sibling = pred.left if right else pred.right
            if pright:
                ppred.right = sibling
            else:
                ppred.left = sibling
            glock.release()
            # pred and curr leave the tree with their flags still held, so
            # any operation still pointing at them fails its lock and retries.
            return True


class FeTree(TreeBase):
    """Flag locking on the edges above the reached leaf, no marks.

    Like fem, insert locks only the leaf and delete locks parent plus leaf.
    Without mark bits a locked-out retired node looks the same as a busy
    one, so after locking, an operation validates by descending again from
    the root and comparing the fresh snapshot node-for-node with the locked
    one; any splice that moved the locked path produces a mismatch because
    retired nodes never reappear on a fresh descent. Flags are released on
    success.
    """

    variant = "fe"
    _fresh_lock = staticmethod(FlagLock)

    def insert(self, key: int) -> bool:
        check_key(key)
        while True:
            _, _, pred, right, curr = self._find(key)
            if curr.key == key:
                return False
            clock = curr.lock
            if not clock.try_acquire():
                self._count_retry()
                continue
            fresh = self._find(key)
            if fresh.pred is not pred or fresh.curr is not curr:
                clock.release()
                self._count_retry()
                continue
            router = self._router_above(key, curr)
            if right:
                pred.right = router
            else:
                pred.left = router
            clock.release()
            return True

    def delete(self, key: int) -> bool:
        check_key(key)
        while True:
            ppred, pright, pred, right, curr = self._find(key)
            if curr.key != key:
                return False
            plock = pred.lock
            if not plock.try_acquire():
                self._count_retry()
                continue
            clock = curr.lock
            if not clock.try_acquire():
                plock.release()
                self._count_retry()
                continue
            fresh = self._find(key)
            if (
                fresh.ppred is not ppred
                or fresh.pred is not pred
                or fresh.curr is not curr
            ):
                clock.release()
                plock.release()
                self._count_retry()
                continue
            # Wait out any insert holding the sibling: the lock test must
            # come before the link re-read, otherwise a release between the
            # two reads could hand back a sibling that was already replaced.
            sibling = pred.left if right else pred.right
            while sibling.lock.held or (pred.left if right else pred.right) is not sibling:
                time.sleep(0)
                sibling = pred.left if right else pred.right
            if pright:
                ppred.right = sibling
            else:
                ppred.left = sibling
            clock.release()
            plock.release()
            return True


class FemTree(TreeBase):
    """Flag-and-mark locking on the edges above the reached leaf.

    insert owns the edge above the reached leaf by flagging the leaf itself;
    delete owns the two edges above the removed leaf by flagging parent and
    leaf and marking both. The mark is what lets a later operation tell a
    retired node from a merely busy one without re-descending: rollback
    paths unmark strictly before they release, and successful deletes never
    release at all, so a visibly marked node is permanently out of the tree.
    """

    variant = "fem"
    _fresh_lock = staticmethod(FlagMarkWord)

    def insert(self, key: int) -> bool:
        check_key(key)
        while True:
            _, _, pred, right, curr = self._find(key)
            if curr.key == key:
                return False
            clock = curr.lock
            if not clock.try_acquire():
                self._count_retry()
                continue
            if pred.lock.marked:
                clock.release()
                self._count_retry()
                continue
            if (pred.right if right else pred.left) is not curr:
                clock.release()
                self._count_retry()
                continue
            router = self._router_above(key, curr)
            if right:
                pred.right = router
            else:
                pred.left = router
            clock.release()
            return True

    def delete(self, key: int) -> bool:
        check_key(key)
        while True:
            ppred, pright, pred, right, curr = self._find(key)
            if curr.key != key:
                return False
            plock = pred.lock
            if plock.marked or not plock.try_acquire():
                self._count_retry()
                continue
            plock.marked = True
            glock = ppred.lock
            if glock.marked or (ppred.right if pright else ppred.left) is not pred:
                plock.marked = False
                plock.release()
                self._count_retry()
                continue
            clock = curr.lock
            if not clock.try_acquire():
                plock.marked = False
                plock.release()
                self._count_retry()
                continue
            clock.marked = True
            if (pred.right if right else pred.left) is not curr:
                clock.marked = False
                clock.release()
                plock.marked = False
                plock.release()
                self._count_retry()
                continue
            # Wait out any insert holding the sibling: the lock test must
            # come before the link re-read, otherwise a release between the
            # two reads could hand back a sibling that was already replaced.
            sibling = pred.left if right else pred.right
            while sibling.lock.held or (pred.left if right else pred.right) is not sibling:
                time.sleep(0)
                sibling = pred.left if right else pred.right
            if pright:
                ppred.right = sibling
            else:
                ppred.left = sibling
            # pred and curr stay flagged and marked forever: the marks make
            # their retirement visible, and the held flags make every later
            # try_acquire on them fail.
            return True


class TnTree(TreeBase):
    """Ticket locking on internal nodes with version-stamp validation.

    The descent samples each internal node's version before reading its
    child pointer. insert then locks pred and commits only if pred's stamp
    is unchanged; delete locks ppred then pred the same way, top-down. A
    release bumps the version, so an unchanged stamp under a held ticket
    means no write committed on that node since its pointer was read, which
    pins the whole locked path. The retired parent's ticket is never
    released, so stale lock attempts on it fail; leaves are never locked.
    """

    variant = "tn"
    _fresh_lock = staticmethod(TicketLock)

    def _find_stamped(self, key):
        ppred = None
        pright = False
        gstamp = 0
        pred = None
        right = False
        pstamp = 0
        curr = self.root
        cstamp = curr.lock.version
        left = curr.left
        while left is not None:
            ppred = pred
            pright = right
            gstamp = pstamp
            pred = curr
            pstamp = cstamp
            if key < curr.key:
                right = False
                curr = left
            else:
                right = True
                curr = curr.right
            cstamp = curr.lock.version
            left = curr.left
        return TnSnapshot(ppred, pright, pred, right, curr, pstamp, gstamp)

    def insert(self, key: int) -> bool:
        check_key(key)
        while True:
            s = self._find_stamped(key)
            curr = s.curr
            if curr.key == key:
                return False
            pred = s.pred
            plock = pred.lock
            if not plock.try_acquire():
                self._count_retry()
                continue
            if plock.version != s.pred_stamp:
                plock.release()
                self._count_retry()
                continue
            router = self._router_above(key, curr)
            if s.right:
                pred.right = router
            else:
                pred.left = router
            plock.release()
            return True

    def delete(self, key: int) -> bool:
        check_key(key)
        while True:
            s = self._find_stamped(key)
            curr = s.curr
            if curr.key != key:
                return False
            ppred = s.ppred
            pred = s.pred
            glock = ppred.lock
            if not glock.try_acquire():
                self._count_retry()
                continue
            if glock.version != s.ppred_stamp:
                glock.release()
                self._count_retry()
                continue
            plock = pred.lock
            if not plock.try_acquire():
                glock.release()
                self._count_retry()
                continue
            if plock.version != s.pred_stamp:
                plock.release()
                glock.release()
                self._count_retry()
                continue
            sibling = pred.left if s.right else pred.right
            if s.pright:
                ppred.right = sibling
            else:
                ppred.left = sibling
            glock.release()
            # pred's ticket is never released: the retired node stays locked
            # so any operation that still points at it fails and retries.
            return True


_VARIANTS: dict[str, type[TreeBase]] = {
    "seq": SeqTree,
    "coarse": CoarseTree,
    "fn": FnTree,
    "fe": FeTree,
    "fem": FemTree,
    "tn": TnTree,
}

VARIANT_NAMES = tuple(_VARIANTS)
CONCURRENT_VARIANTS = tuple(n for n in _VARIANTS if n != "seq")


def new_tree(variant: str) -> TreeBase:
    """Construct an empty tree of the named variant."""
    try:
        cls = _VARIANTS[variant.lower()]
    except (KeyError, AttributeError):
        raise ValueError(
            f"unknown variant {variant!r}; expected one of {', '.join(_VARIANTS)}"
        ) from None
    return cls()
