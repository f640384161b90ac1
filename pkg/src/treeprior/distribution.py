"""The parametric distribution on full rooted subtrees.

A tree is drawn by starting at the root and, at every node reached,
expanding it (giving it all ``k`` children) with probability ``alpha[v]``.
Base-tree leaves never expand, so their ``alpha`` is pinned to 0.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import NumericError, ParameterError, ShapeError, SubtreeError
from .recursions import tree_sum
from .tree_core import (
    ROOT,
    BaseShape,
    FullSubtree,
    NodeId,
    ancestors,
    format_node,
    node_values,
    validate_subtree,
)


class TreeDistribution:
    """Immutable parameter family ``alpha`` over the nodes of a base tree.

    ``alpha`` may be a mapping ``node -> value`` (base leaves may be
    omitted), a callable, or a dense array in node-index order.  With
    ``strict=False`` nonzero values at base leaves are silently set to 0.
    """

    __slots__ = ("shape", "alpha")

    def __init__(self, shape: BaseShape, alpha, *, strict: bool = True):
        if isinstance(alpha, TreeDistribution):
            alpha = alpha.alpha
        if hasattr(alpha, "keys"):
            arr = node_values(shape, alpha, "alpha", leaves=0.0)
            for v, a in alpha.items():
                if shape.is_leaf(v):
                    arr[shape.index(v)] = a
        else:
            arr = node_values(shape, alpha, "alpha")
        bad = ~((arr >= 0.0) & (arr <= 1.0))
        if bad.any():
            i = int(np.argmax(bad))
            raise ParameterError(
                f"alpha at node {format_node(shape.node(i))} is {arr[i]!r}, outside [0, 1]"
            )
        leaves = arr[shape.num_inner:]
        if strict and leaves.any():
            i = shape.num_inner + int(np.argmax(leaves != 0))
            raise ParameterError(
                f"alpha must be 0 at base-tree leaf {format_node(shape.node(i))}, got {arr[i]!r}"
            )
        leaves[:] = 0.0
        arr.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "alpha", arr)

    def __setattr__(self, name, value):
        raise AttributeError("TreeDistribution is immutable")

    @classmethod
    def uniform(cls, shape: BaseShape, value: float) -> "TreeDistribution":
        """Same ``alpha`` at every base-tree inner node."""
        arr = np.full(shape.num_nodes, float(value))
        arr[shape.num_inner:] = 0.0
        return cls(shape, arr)

    def __getitem__(self, v: NodeId) -> float:
        return float(self.alpha[self.shape.index(v)])

    def as_dict(self) -> dict:
        """``alpha`` keyed by node, for base-tree inner nodes only."""
        return {v: float(a) for v, a in zip(self.shape.nodes(), self.alpha[: self.shape.num_inner])}

    def __eq__(self, other):
        if not isinstance(other, TreeDistribution):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.alpha, other.alpha)

    __hash__ = None

    def __repr__(self):
        return f"TreeDistribution(k={self.shape.k}, d_max={self.shape.d_max}, alpha={self.alpha.tolist()})"


def new_distribution(shape: BaseShape, alpha, *, strict: bool = True) -> TreeDistribution:
    return TreeDistribution(shape, alpha, strict=strict)


def _check_tree(d: TreeDistribution, t: FullSubtree):
    if t.shape != d.shape:
        raise ShapeError(f"subtree shape {t.shape} does not match distribution shape {d.shape}")
    violation = validate_subtree(t)
    if violation is not None:
        raise SubtreeError(str(violation))


def prob(d: TreeDistribution, t: FullSubtree) -> float:
    """p(t) = prod_{inner} alpha * prod_{leaves} (1 - alpha)."""
    _check_tree(d, t)
    idx = d.shape.index
    inner = math.prod(d.alpha[idx(v)] for v in sorted(t.inner))
    leaf = math.prod(1.0 - d.alpha[idx(v)] for v in t.leaves)
    return float(inner * leaf)


def log_prob(d: TreeDistribution, t: FullSubtree) -> float:
    """log p(t), summed in log space; ``-inf`` if any factor vanishes."""
    _check_tree(d, t)
    idx = d.shape.index
    factors = [d.alpha[idx(v)] for v in t.inner]
    factors += [1.0 - d.alpha[idx(v)] for v in t.leaves]
    if min(factors) == 0.0:
        return -math.inf
    return math.fsum(math.log(f) for f in factors)


def total_mass(d: TreeDistribution) -> float:
    """Sum of p over all subtrees, evaluated by the tree fold (equals 1)."""
    return tree_sum(d.shape, d.alpha, 1.0 - d.alpha)


class NodeEvents(NamedTuple):
    in_tree: float
    inner: float
    leaf: float


def node_event_probs(d: TreeDistribution, v: NodeId) -> NodeEvents:
    """Pr{v in tree}, Pr{v inner}, Pr{v leaf} for a random tree."""
    d.shape.check_node(v)
    p = math.prod(d.alpha[d.shape.index(a)] for a in ancestors(v))
    p_inner = d.alpha[d.shape.index(v)] * p
    return NodeEvents(float(p), float(p_inner), float(p - p_inner))


def conditional_expand_prob(d: TreeDistribution, v: NodeId) -> float:
    """Pr{v inner | v in tree}, which is just alpha[v]."""
    if node_event_probs(d, v).in_tree == 0.0:
        raise NumericError(
            f"Pr{{v in tree}} = 0 for node {format_node(v)}; the conditional is undefined"
        )
    return d[v]


def _sample_masks(d: TreeDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    shape = d.shape
    expand = rng.random((n, shape.num_nodes)) < d.alpha
    inner = np.zeros_like(expand)
    inner[:, 0] = expand[:, 0]
    for depth in range(1, shape.d_max):
        start, stop = shape.level_start(depth), shape.level_start(depth + 1)
        pstart = shape.level_start(depth - 1)
        reached = np.repeat(inner[:, pstart:start], shape.k, axis=1)
        inner[:, start:stop] = reached & expand[:, start:stop]
    return inner


def sample(d: TreeDistribution, rng=None, size: int | None = None):
    """Draw one tree (``size=None``) or a list of ``size`` trees.

    Every node gets an independent uniform draw; a node is inner iff it is
    reached from the root through inner nodes and its draw is below alpha.
    This is the top-down generative process, vectorized.
    """
    rng = np.random.default_rng(rng)
    n = 1 if size is None else int(size)
    masks = _sample_masks(d, n, rng)
    nodes = list(d.shape.nodes())
    trees = [FullSubtree(d.shape, (nodes[i] for i in np.flatnonzero(row))) for row in masks]
    return trees[0] if size is None else trees


def sample_counts(d: TreeDistribution, n: int, rng=None) -> dict:
    """Frequency table ``{FullSubtree: count}`` of ``n`` draws."""
    rng = np.random.default_rng(rng)
    masks = _sample_masks(d, n, rng)
    nodes = list(d.shape.nodes())
    rows, counts = np.unique(masks, axis=0, return_counts=True)
    return {
        FullSubtree(d.shape, (nodes[i] for i in np.flatnonzero(row))): int(c)
        for row, c in zip(rows, counts)
    }


__all__ = [
    "ROOT",
    "NodeEvents",
    "TreeDistribution",
    "conditional_expand_prob",
    "log_prob",
    "new_distribution",
    "node_event_probs",
    "prob",
    "sample",
    "sample_counts",
    "total_mass",
]
