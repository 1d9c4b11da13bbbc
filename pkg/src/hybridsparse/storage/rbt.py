"""Red-black tree storage keyed by linear element index.

Each element is a node ``(index, value)`` with ``index = row + col * n_rows``,
so an in-order walk visits elements in column-major order.

Nodes live in a pool: ``pool[i]`` is a record ``(key, val, left, right)``
with int32 child slots, and ``red[i]`` holds the colour bit (only rebalancing
reads colours, so they stay out of the traversal's cache lines).  Only child
links are stored; insertion and deletion record the root-to-node path in a
small stack and rebalance from that.  Freed slots are chained through
``left``.

Scalar tree state sits in the int64 array ``meta`` so compiled routines can
update it in place (see the ``M_*`` slot constants).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, NamedTuple

import numba as nb
import numpy as np

from .._instrument import counters
from ..errors import BoundsError, InvariantError

NIL = -1

M_ROOT, M_COUNT, M_USED, M_FREE, M_HINT, M_FAST = 0, 1, 2, 3, 4, 5

# red-black height is at most 2*log2(N+1) <= 64 for an int32 pool;
# deletion may push one extra frame after a rotation
STACK_DEPTH = 96
MIN_POOL = 16


@lru_cache(maxsize=None)
def node_dtype(value_dtype) -> np.dtype:
    return np.dtype(
        [("key", np.int64), ("val", value_dtype), ("left", np.int32), ("right", np.int32)]
    )


class RbtNode(NamedTuple):
    index: int
    value: float
    left: int
    right: int
    color: str


class RbtStorage:
    __slots__ = ("n_rows", "n_cols", "pool", "red", "meta", "stack")

    def __init__(self, n_rows, n_cols, capacity=0, dtype=np.float64):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        capacity = max(int(capacity), MIN_POOL)
        self.pool = np.empty(capacity, dtype=node_dtype(np.dtype(dtype)))
        self.red = np.zeros(capacity, dtype=np.uint8)
        self.meta = np.array([NIL, 0, 0, NIL, -1, 0], dtype=np.int64)
        self.stack = np.empty(STACK_DEPTH, dtype=np.int64)
        counters.matrix_allocs += 1

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def dtype(self):
        return self.pool.dtype["val"]

    @property
    def root(self) -> int:
        return int(self.meta[M_ROOT])

    @property
    def n_nonzero(self) -> int:
        return int(self.meta[M_COUNT])

    @property
    def max_index_hint(self) -> int:
        return int(self.meta[M_HINT])

    @property
    def fast_path_inserts(self) -> int:
        """Insertions that skipped the key search (append fast path)."""
        return int(self.meta[M_FAST])

    @property
    def capacity(self) -> int:
        return len(self.pool)

    def node(self, slot: int) -> RbtNode:
        rec = self.pool[slot]
        color = "red" if self.red[slot] else "black"
        return RbtNode(int(rec["key"]), rec["val"].item(), int(rec["left"]), int(rec["right"]), color)

    def copy(self) -> "RbtStorage":
        out = RbtStorage(self.n_rows, self.n_cols, 0, self.dtype)
        out.pool = self.pool.copy()
        out.red = self.red.copy()
        out.meta = self.meta.copy()
        return out

    def __repr__(self):
        return f"RbtStorage({self.n_rows}x{self.n_cols}, n_nonzero={self.n_nonzero})"


@nb.njit(cache=True, inline="always")
def _is_red(red, x):
    return x != NIL and red[x] == 1


@nb.njit(cache=True, inline="always")
def _relink(pool, meta, parent, old, new):
    if parent == NIL:
        meta[M_ROOT] = new
    elif pool[parent].left == old:
        pool[parent].left = new
    else:
        pool[parent].right = new


@nb.njit(cache=True)
def _rotate_left(pool, meta, x, parent):
    y = pool[x].right
    pool[x].right = pool[y].left
    pool[y].left = x
    _relink(pool, meta, parent, x, y)


@nb.njit(cache=True)
def _rotate_right(pool, meta, x, parent):
    y = pool[x].left
    pool[x].left = pool[y].right
    pool[y].right = x
    _relink(pool, meta, parent, x, y)


@nb.njit(cache=True)
def _alloc(pool, red, meta, key, value):
    slot = meta[M_FREE]
    if slot != NIL:
        meta[M_FREE] = pool[slot].left
    else:
        slot = meta[M_USED]
        if slot == pool.shape[0]:
            cap = 2 * pool.shape[0]
            grown = np.empty(cap, dtype=pool.dtype)
            grown[:slot] = pool[:slot]
            grown_red = np.empty(cap, dtype=red.dtype)
            grown_red[:slot] = red[:slot]
            pool = grown
            red = grown_red
        meta[M_USED] = slot + 1
    pool[slot].key = key
    pool[slot].left = NIL
    pool[slot].right = NIL
    red[slot] = 1
    pool[slot].val = value
    return pool, red, slot


@nb.njit(cache=True)
def _insert(pool, red, meta, stack, key, value):
    root = meta[M_ROOT]
    if root == NIL:
        pool, red, z = _alloc(pool, red, meta, key, value)
        red[z] = 0
        meta[M_ROOT] = z
        meta[M_COUNT] += 1
        meta[M_FAST] += 1
        if key > meta[M_HINT]:
            meta[M_HINT] = key
        return pool, red

    depth = 0
    x = root
    if key > meta[M_HINT]:
        # larger than every stored key: follow the right spine, no comparisons
        while x != NIL:
            stack[depth] = x
            depth += 1
            x = pool[x].right
        go_left = False
        meta[M_FAST] += 1
    else:
        while True:
            k = pool[x].key
            if key == k:
                pool[x].val = value
                return pool, red
            stack[depth] = x
            depth += 1
            nxt = pool[x].left if key < k else pool[x].right
            if nxt == NIL:
                break
            x = nxt
        go_left = key < pool[x].key

    pool, red, z = _alloc(pool, red, meta, key, value)
    parent = stack[depth - 1]
    if go_left:
        pool[parent].left = z
    else:
        pool[parent].right = z
    meta[M_COUNT] += 1
    if key > meta[M_HINT]:
        meta[M_HINT] = key

    # stack[0:depth] holds the ancestors of z; stack[depth-1] is its parent
    while depth >= 2:
        p = stack[depth - 1]
        if red[p] == 0:
            break
        g = stack[depth - 2]
        gg = stack[depth - 3] if depth >= 3 else NIL
        if pool[g].left == p:
            u = pool[g].right
            if _is_red(red, u):
                red[p] = 0
                red[u] = 0
                red[g] = 1
                z = g
                depth -= 2
                continue
            if pool[p].right == z:
                _rotate_left(pool, meta, p, g)
                p = z
            red[p] = 0
            red[g] = 1
            _rotate_right(pool, meta, g, gg)
            break
        else:
            u = pool[g].left
            if _is_red(red, u):
                red[p] = 0
                red[u] = 0
                red[g] = 1
                z = g
                depth -= 2
                continue
            if pool[p].left == z:
                _rotate_right(pool, meta, p, g)
                p = z
            red[p] = 0
            red[g] = 1
            _rotate_left(pool, meta, g, gg)
            break
    red[meta[M_ROOT]] = 0
    return pool, red


@nb.njit(cache=True)
def _delete(pool, red, meta, stack, key):
    depth = 0
    z = meta[M_ROOT]
    while z != NIL:
        k = pool[z].key
        if key == k:
            break
        stack[depth] = z
        depth += 1
        z = pool[z].left if key < k else pool[z].right
    if z == NIL:
        return False

    d = z
    if pool[z].left != NIL and pool[z].right != NIL:
        # move the in-order successor's payload into z, then unlink the successor
        stack[depth] = z
        depth += 1
        d = pool[z].right
        while pool[d].left != NIL:
            stack[depth] = d
            depth += 1
            d = pool[d].left
        pool[z].key = pool[d].key
        pool[z].val = pool[d].val

    c = pool[d].left if pool[d].left != NIL else pool[d].right
    parent = stack[depth - 1] if depth > 0 else NIL
    _relink(pool, meta, parent, d, c)
    removed_red = red[d] == 1
    pool[d].key = NIL
    pool[d].left = meta[M_FREE]
    meta[M_FREE] = d
    meta[M_COUNT] -= 1
    if removed_red:
        return True

    # x carries an extra black; its parent is stack[depth-1]
    x = c
    while depth > 0 and not _is_red(red, x):
        p = stack[depth - 1]
        gp = stack[depth - 2] if depth >= 2 else NIL
        if pool[p].left == x:
            w = pool[p].right
            if _is_red(red, w):
                red[w] = 0
                red[p] = 1
                _rotate_left(pool, meta, p, gp)
                stack[depth - 1] = w
                stack[depth] = p
                depth += 1
                gp = w
                w = pool[p].right
            if not _is_red(red, pool[w].left) and not _is_red(red, pool[w].right):
                red[w] = 1
                x = p
                depth -= 1
            else:
                if not _is_red(red, pool[w].right):
                    red[pool[w].left] = 0
                    red[w] = 1
                    _rotate_right(pool, meta, w, p)
                    w = pool[p].right
                red[w] = red[p]
                red[p] = 0
                red[pool[w].right] = 0
                _rotate_left(pool, meta, p, gp)
                x = meta[M_ROOT]
                break
        else:
            w = pool[p].left
            if _is_red(red, w):
                red[w] = 0
                red[p] = 1
                _rotate_right(pool, meta, p, gp)
                stack[depth - 1] = w
                stack[depth] = p
                depth += 1
                gp = w
                w = pool[p].left
            if not _is_red(red, pool[w].left) and not _is_red(red, pool[w].right):
                red[w] = 1
                x = p
                depth -= 1
            else:
                if not _is_red(red, pool[w].left):
                    red[pool[w].right] = 0
                    red[w] = 1
                    _rotate_left(pool, meta, w, p)
                    w = pool[p].left
                red[w] = red[p]
                red[p] = 0
                red[pool[w].left] = 0
                _rotate_right(pool, meta, p, gp)
                x = meta[M_ROOT]
                break
    if x != NIL:
        red[x] = 0
    return True


@nb.njit(cache=True)
def _find(pool, root, key):
    """Return ``(slot, nodes_visited)``; slot is NIL when absent."""
    x = root
    visits = 0
    while x != NIL:
        visits += 1
        k = pool[x].key
        if key == k:
            return x, visits
        x = pool[x].left if key < k else pool[x].right
    return NIL, visits


@nb.njit(cache=True)
def _insert_many(pool, red, meta, stack, keys, values):
    for i in range(keys.shape[0]):
        pool, red = _insert(pool, red, meta, stack, keys[i], values[i])
    return pool, red


@nb.njit(cache=True)
def _inorder(pool, root, out_keys, out_vals):
    stack = np.empty(STACK_DEPTH, dtype=np.int64)
    sp = 0
    k = 0
    x = root
    while sp > 0 or x != NIL:
        while x != NIL:
            stack[sp] = x
            sp += 1
            x = pool[x].left
        sp -= 1
        x = stack[sp]
        out_keys[k] = pool[x].key
        out_vals[k] = pool[x].val
        k += 1
        x = pool[x].right
    return k


def _check_index(rbt, index):
    if not (0 <= index < rbt.n_rows * rbt.n_cols):
        raise BoundsError(f"linear index {index} outside {rbt.n_rows}x{rbt.n_cols} matrix")


def rbt_insert(rbt: RbtStorage, index: int, value) -> RbtStorage:
    """Insert or overwrite the node for ``index``.  ``value`` must be nonzero.

    An index above ``max_index_hint`` is known to be the largest so far and is
    attached at the end of the right spine without key comparisons.
    """
    _check_index(rbt, index)
    if value == 0:
        raise ValueError("RBT nodes never hold zero; use rbt_delete")
    rbt.pool, rbt.red = _insert(rbt.pool, rbt.red, rbt.meta, rbt.stack, index, value)
    return rbt


def rbt_insert_many(rbt: RbtStorage, indices, values) -> RbtStorage:
    indices = np.asarray(indices, dtype=np.int64)
    values = np.asarray(values, dtype=rbt.dtype)
    if len(indices) and (indices.min() < 0 or indices.max() >= rbt.n_rows * rbt.n_cols):
        raise BoundsError(f"batch has indices outside {rbt.n_rows}x{rbt.n_cols} matrix")
    if np.any(values == 0):
        raise ValueError("RBT nodes never hold zero")
    rbt.pool, rbt.red = _insert_many(rbt.pool, rbt.red, rbt.meta, rbt.stack, indices, values)
    return rbt


def rbt_lookup(rbt: RbtStorage, index: int):
    _check_index(rbt, index)
    slot, _ = _find(rbt.pool, rbt.meta[M_ROOT], index)
    if slot == NIL:
        return rbt.dtype.type(0)
    return rbt.pool[slot]["val"]


def rbt_lookup_visits(rbt: RbtStorage, index: int) -> int:
    """Number of nodes examined when looking up ``index``."""
    _check_index(rbt, index)
    return int(_find(rbt.pool, rbt.meta[M_ROOT], index)[1])


def rbt_delete(rbt: RbtStorage, index: int) -> RbtStorage:
    """Remove the node for ``index``; absent indices are ignored."""
    _check_index(rbt, index)
    _delete(rbt.pool, rbt.red, rbt.meta, rbt.stack, index)
    return rbt


def rbt_arrays(rbt: RbtStorage):
    """In-order ``(indices, values)`` arrays."""
    n = rbt.n_nonzero
    keys = np.empty(n, dtype=np.int64)
    vals = np.empty(n, dtype=rbt.dtype)
    if n:
        _inorder(rbt.pool, rbt.meta[M_ROOT], keys, vals)
    return keys, vals


def rbt_iter(rbt: RbtStorage) -> Iterator[tuple]:
    keys, vals = rbt_arrays(rbt)
    return zip(keys.tolist(), vals.tolist())


def rbt_height(rbt: RbtStorage) -> int:
    """Number of nodes on the longest root-to-leaf path (0 for an empty tree)."""
    if rbt.root == NIL:
        return 0
    left = rbt.pool["left"]
    right = rbt.pool["right"]
    best = 0
    todo = [(rbt.root, 1)]
    while todo:
        x, h = todo.pop()
        best = max(best, h)
        for child in (left[x], right[x]):
            if child != NIL:
                todo.append((int(child), h + 1))
    return best


def rbt_height_bound(n: int) -> float:
    return 2.0 * math.log2(n + 1)


def rbt_audit(rbt: RbtStorage) -> int:
    """Check search order and all red-black properties; return the black height."""
    root = rbt.root
    if root == NIL:
        if rbt.n_nonzero != 0:
            raise InvariantError("empty tree with nonzero count")
        return 0
    if rbt.red[root]:
        raise InvariantError("root is red")
    keys = rbt.pool["key"]
    vals = rbt.pool["val"]
    left = rbt.pool["left"]
    right = rbt.pool["right"]
    seen = 0
    black_height = -1
    # (slot, exclusive lower bound, exclusive upper bound, blacks above, parent is red)
    todo = [(root, -1, rbt.n_rows * rbt.n_cols, 0, False)]
    while todo:
        x, lo, hi, blacks, parent_red = todo.pop()
        if x == NIL:
            if black_height < 0:
                black_height = blacks
            elif blacks != black_height:
                raise InvariantError("unequal black height")
            continue
        seen += 1
        key = int(keys[x])
        if not (lo < key < hi):
            raise InvariantError(f"key {key} violates search order")
        is_red = bool(rbt.red[x])
        if is_red and parent_red:
            raise InvariantError(f"red node {key} has red parent")
        if vals[x] == 0:
            raise InvariantError(f"node {key} holds zero")
        blacks += 0 if is_red else 1
        todo.append((int(left[x]), lo, key, blacks, is_red))
        todo.append((int(right[x]), key, hi, blacks, is_red))
    if seen != rbt.n_nonzero:
        raise InvariantError(f"reachable nodes {seen} != count {rbt.n_nonzero}")
    return black_height
