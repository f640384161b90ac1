"""Base-tree geometry, node addressing, and full rooted subtrees.

Nodes are addressed by their child-index path from the root, stored as a
plain tuple of ints: ``()`` is the root, ``(1, 0)`` is the first child of
the second child of the root.  For array-backed storage every node also has
a dense breadth-first index, with the heap layout

    index(children(v)[i]) == k * index(v) + 1 + i

so that each depth level occupies a contiguous block of indices.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Tuple

import numpy as np

from .errors import CapExceededError, ShapeError, SubtreeError

NodeId = Tuple[int, ...]

ROOT: NodeId = ()

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class BaseShape:
    """The perfect k-ary base tree of depth ``d_max``."""

    k: int
    d_max: int

    def __post_init__(self):
        for name in ("k", "d_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ShapeError(f"{name} must be an integer, got {value!r}")
        if self.k < 1:
            raise ShapeError(f"k must be >= 1, got {self.k}")
        if self.d_max < 0:
            raise ShapeError(f"d_max must be >= 0, got {self.d_max}")
        if self.level_start(self.d_max + 1) > sys.maxsize:
            raise ShapeError(
                f"base tree with k={self.k}, d_max={self.d_max} has more nodes "
                f"than the platform integer range"
            )

    def level_start(self, depth: int) -> int:
        """Dense index of the first node at ``depth``."""
        if self.k == 1:
            return depth
        return (self.k**depth - 1) // (self.k - 1)

    def level_size(self, depth: int) -> int:
        return self.k**depth

    @cached_property
    def num_nodes(self) -> int:
        return self.level_start(self.d_max + 1)

    @cached_property
    def num_inner(self) -> int:
        """Number of base-tree inner nodes (depth < d_max)."""
        return self.level_start(self.d_max)

    def contains(self, v) -> bool:
        if not isinstance(v, tuple) or len(v) > self.d_max:
            return False
        return all(
            isinstance(i, int) and not isinstance(i, bool) and 0 <= i < self.k
            for i in v
        )

    def check_node(self, v) -> NodeId:
        if not self.contains(v):
            raise ShapeError(f"{v!r} is not a node of the base tree (k={self.k}, d_max={self.d_max})")
        return v

    def is_leaf(self, v: NodeId) -> bool:
        """True for base-tree leaves, i.e. nodes at depth d_max."""
        return len(v) == self.d_max

    def index(self, v: NodeId) -> int:
        self.check_node(v)
        offset = 0
        for i in v:
            offset = offset * self.k + i
        return self.level_start(len(v)) + offset

    def node(self, index: int) -> NodeId:
        if not 0 <= index < self.num_nodes:
            raise ShapeError(f"node index {index} out of range [0, {self.num_nodes})")
        depth = 0
        while self.level_start(depth + 1) <= index:
            depth += 1
        offset = index - self.level_start(depth)
        path = []
        for _ in range(depth):
            offset, i = divmod(offset, self.k)
            path.append(i)
        return tuple(reversed(path))

    def nodes(self) -> Iterator[NodeId]:
        """All nodes in dense-index (breadth-first) order."""
        for depth in range(self.d_max + 1):
            yield from itertools.product(range(self.k), repeat=depth)

    def children(self, v: NodeId) -> list[NodeId]:
        return children(v, self)


def depth(v: NodeId) -> int:
    return len(v)


def parent(v: NodeId) -> NodeId:
    if len(v) == 0:
        raise ShapeError("root has no parent")
    return v[:-1]


def children(v: NodeId, shape: BaseShape) -> list[NodeId]:
    shape.check_node(v)
    if len(v) >= shape.d_max:
        raise ShapeError(f"base-tree leaf has no children: {list(v)}")
    return [v + (i,) for i in range(shape.k)]


def is_ancestor(v: NodeId, w: NodeId) -> bool:
    """Strict ancestor relation: ``v`` is a proper prefix of ``w``."""
    return len(v) < len(w) and w[: len(v)] == v


def ancestors(v: NodeId) -> list[NodeId]:
    """Strict ancestors of ``v``, root first."""
    return [v[:i] for i in range(len(v))]


def format_node(v: NodeId) -> str:
    return str(list(v))


def shortlex_key(nodes: Iterable[NodeId]):
    ordered = sorted(nodes)
    return (len(ordered), ordered)


@dataclass(frozen=True)
class FullSubtree:
    """A full rooted subtree, represented by its set of inner nodes.

    Construction does not validate; use :func:`validate_subtree` or
    :meth:`checked`.  An empty inner set is the root-only tree.
    """

    shape: BaseShape
    inner: frozenset

    def __init__(self, shape: BaseShape, inner: Iterable[NodeId] = ()):
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "inner", frozenset(tuple(v) for v in inner))

    def checked(self) -> "FullSubtree":
        violation = validate_subtree(self)
        if violation is not None:
            raise SubtreeError(str(violation))
        return self

    @cached_property
    def leaves(self) -> list[NodeId]:
        if not self.inner:
            return [ROOT]
        return sorted(
            c
            for v in self.inner
            for c in (v + (i,) for i in range(self.shape.k))
            if c not in self.inner
        )

    @property
    def nodes(self) -> list[NodeId]:
        return sorted(self.inner.union(self.leaves))

    @property
    def edges(self) -> list[tuple[NodeId, NodeId]]:
        return sorted((v[:-1], v) for v in self.nodes if v)

    @property
    def sort_key(self):
        return shortlex_key(self.inner)

    def __lt__(self, other: "FullSubtree"):
        return self.sort_key < other.sort_key

    def __repr__(self):
        inner = ", ".join(format_node(v) for v in sorted(self.inner))
        return f"FullSubtree(k={self.shape.k}, d_max={self.shape.d_max}, inner={{{inner}}})"


class Violation(NamedTuple):
    rule: str
    node: object

    def __str__(self):
        node = format_node(self.node) if isinstance(self.node, tuple) else repr(self.node)
        sep = " " if self.rule.endswith("missing") else ": "
        return f"{self.rule}{sep}{node}"


def validate_subtree(t: FullSubtree) -> Violation | None:
    """Return ``None`` if ``t`` is a valid full rooted subtree, else the first violation."""
    shape = t.shape
    foreign = sorted((v for v in t.inner if not shape.contains(v)), key=repr)
    if foreign:
        return Violation("not a base-tree node", foreign[0])
    for v in sorted(t.inner, key=lambda v: (len(v), v)):
        if len(v) >= shape.d_max:
            return Violation("inner node at maximum depth", v)
        if v and v[:-1] not in t.inner:
            missing = next(a for a in ancestors(v) if a not in t.inner)
            return Violation("not prefix-closed: missing", missing)
    return None


def count_subtrees(shape: BaseShape, cap: int | None = None) -> int:
    """Exact |T| via t(0) = 1, t(d+1) = t(d)**k + 1.

    With ``cap`` set, raises :class:`CapExceededError` as soon as a partial
    count passes it, so huge shapes never build astronomically large ints.
    """
    t = 1
    for _ in range(shape.d_max):
        if cap is not None and t > cap:
            raise CapExceededError(t, cap, exact=False)
        t = t**shape.k + 1
    if cap is not None and t > cap:
        raise CapExceededError(t, cap)
    return t


def iter_subtrees(shape: BaseShape, cap: int | None = DEFAULT_CAP) -> Iterator[FullSubtree]:
    """Yield every full rooted subtree once, in a fixed recursion order."""
    count_subtrees(shape, cap)

    def inner_sets(v: NodeId) -> Iterator[tuple]:
        yield ()
        if len(v) < shape.d_max:
            per_child = [list(inner_sets(v + (i,))) for i in range(shape.k)]
            for combo in itertools.product(*per_child):
                yield (v,) + tuple(itertools.chain.from_iterable(combo))

    for inner in inner_sets(ROOT):
        yield FullSubtree(shape, inner)


def enumerate_subtrees(shape: BaseShape, cap: int | None = DEFAULT_CAP) -> list[FullSubtree]:
    """All of T, sorted by inner-node count then lexicographically."""
    return sorted(iter_subtrees(shape, cap), key=lambda t: t.sort_key)


def node_values(shape: BaseShape, values, name: str = "values", *, leaves=None) -> np.ndarray:
    """Dense float array of per-node values in index order.

    ``values`` may be a callable ``node -> float``, a mapping keyed by node,
    or an array-like of length ``num_nodes``.  With ``leaves`` set, base-tree
    leaves are filled with that constant instead of being looked up, and a
    callable is evaluated on inner nodes only.
    """
    n = shape.num_nodes
    n_eval = shape.num_inner if leaves is not None else n
    out = np.empty(n, dtype=float)
    if leaves is not None:
        out[n_eval:] = leaves
    if callable(values) and not hasattr(values, "__len__"):
        for i, v in enumerate(itertools.islice(shape.nodes(), n_eval)):
            out[i] = values(v)
    elif hasattr(values, "keys"):
        for key in values:
            if not shape.contains(key):
                raise ShapeError(f"{name}: {key!r} is not a node of the base tree")
        for i, v in enumerate(itertools.islice(shape.nodes(), n_eval)):
            try:
                out[i] = values[v]
            except KeyError:
                raise ShapeError(f"{name}: no value for node {format_node(v)}") from None
    else:
        arr = np.asarray(values, dtype=float)
        if arr.shape == (n,):
            out[:n_eval] = arr[:n_eval]
        elif arr.shape == (shape.num_inner,) and leaves is not None:
            out[:n_eval] = arr
        else:
            raise ShapeError(f"{name}: expected {n} per-node values, got shape {arr.shape}")
    return out
