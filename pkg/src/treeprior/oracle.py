"""Brute-force ground truth by exhaustive enumeration of all full subtrees.

Nothing here touches the folds in :mod:`treeprior.recursions`; every
quantity is the literal sum or max over the enumerated trees, with sums
accumulated by :func:`math.fsum` so the result does not depend on order.
Only practical for small base trees (the number of subtrees grows doubly
exponentially in depth), hence the cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ShapeError, ZeroEvidenceError
from .tree_core import DEFAULT_CAP, BaseShape, FullSubtree, enumerate_subtrees, iter_subtrees


@dataclass(frozen=True)
class OracleRow:
    tree: FullSubtree
    prob: float
    likelihood: Optional[float] = None
    posterior: Optional[float] = None


@dataclass(frozen=True)
class OracleReport:
    rows: tuple
    total: float
    max: float
    argmax: FullSubtree
    entropy: float
    marginal: Optional[float] = None

    def prob_of(self, t: FullSubtree) -> float:
        return next(r.prob for r in self.rows if r.tree == t)

    def posterior_of(self, t: FullSubtree) -> float:
        return next(r.posterior for r in self.rows if r.tree == t)


class EnumerationTable:
    """All subtrees of a shape as boolean inner/leaf membership rows.

    Row ``r`` describes ``trees[r]``; column ``i`` is node index ``i``.
    Products and sums over a tree's nodes become masked row reductions.
    """

    def __init__(self, shape: BaseShape, cap: int = DEFAULT_CAP):
        self.shape = shape
        self.trees = enumerate_subtrees(shape, cap)
        n = shape.num_nodes
        self.inner = np.zeros((len(self.trees), n), dtype=bool)
        self.leaf = np.zeros((len(self.trees), n), dtype=bool)
        for r, t in enumerate(self.trees):
            self.inner[r, [shape.index(v) for v in t.inner]] = True
            self.leaf[r, [shape.index(v) for v in t.leaves]] = True
        self.inner.flags.writeable = False
        self.leaf.flags.writeable = False

    def products(self, inner_values, leaf_values) -> np.ndarray:
        """Per tree: prod_{inner} inner_values * prod_{leaves} leaf_values."""
        a = np.where(self.inner, np.asarray(inner_values, dtype=float), 1.0).prod(axis=1)
        b = np.where(self.leaf, np.asarray(leaf_values, dtype=float), 1.0).prod(axis=1)
        return a * b

    def sums(self, inner_values, leaf_values) -> np.ndarray:
        """Per tree: sum_{inner} inner_values + sum_{leaves} leaf_values."""
        a = np.where(self.inner, np.asarray(inner_values, dtype=float), 0.0).sum(axis=1)
        b = np.where(self.leaf, np.asarray(leaf_values, dtype=float), 0.0).sum(axis=1)
        return a + b

    def probs(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        return self.products(alpha, 1.0 - alpha)

    def log_probs(self, alpha) -> np.ndarray:
        """Per-tree log p, summed factor by factor so tiny factors do not underflow."""
        alpha = np.asarray(alpha, dtype=float)
        with np.errstate(divide="ignore"):
            return self.sums(np.log(alpha), np.log1p(-alpha))


@lru_cache(maxsize=32)
def enumeration_table(shape: BaseShape, cap: int = DEFAULT_CAP) -> EnumerationTable:
    return EnumerationTable(shape, cap)


def oracle_expect_product(d, g, h, cap: int = DEFAULT_CAP) -> float:
    """sum_t p(t) prod_{inner} g * prod_{leaves} h, with g, h dense node arrays."""
    table = enumeration_table(d.shape, cap)
    return math.fsum(table.probs(d.alpha) * table.products(g, h))


def oracle_expect_sum(d, g, h, cap: int = DEFAULT_CAP) -> float:
    """sum_t p(t) (sum_{inner} g + sum_{leaves} h), with g, h dense node arrays."""
    table = enumeration_table(d.shape, cap)
    return math.fsum(table.probs(d.alpha) * table.sums(g, h))


def _alpha_table(d) -> dict:
    return {v: float(a) for v, a in zip(d.shape.nodes(), d.alpha)}


def literal_product(t: FullSubtree, inner_factor, leaf_factor) -> float:
    """prod_{inner} inner_factor(v) * prod_{leaves} leaf_factor(v)."""
    out = 1.0
    for v in sorted(t.inner):
        out *= inner_factor(v)
    for v in t.leaves:
        out *= leaf_factor(v)
    return out


def literal_prob(d, t: FullSubtree, table: dict | None = None) -> float:
    alpha = table if table is not None else _alpha_table(d)
    return literal_product(t, lambda v: alpha[v], lambda v: 1.0 - alpha[v])


def _entropy(probs) -> float:
    return -math.fsum(p * math.log(p) for p in probs if p > 0)


def oracle_summary(d, cap: int = DEFAULT_CAP) -> OracleReport:
    """Table of p(t) over all subtrees plus sum, max, argmax and entropy."""
    table = enumeration_table(d.shape, cap)
    rows = tuple(OracleRow(t, float(p)) for t, p in zip(table.trees, table.probs(d.alpha)))
    best = max(rows, key=lambda r: r.prob)  # first maximizer in shortlex order
    return OracleReport(
        rows=rows,
        total=math.fsum(r.prob for r in rows),
        max=best.prob,
        argmax=best.tree,
        entropy=_entropy(r.prob for r in rows),
    )


def oracle_expectation(d, f: Callable[[FullSubtree], float], cap: int = DEFAULT_CAP) -> float:
    """sum_t f(t) p(t)."""
    alpha = _alpha_table(d)
    return math.fsum(f(t) * literal_prob(d, t, alpha) for t in iter_subtrees(d.shape, cap))


def oracle_tree_sum(shape: BaseShape, G, H, cap: int = DEFAULT_CAP) -> float:
    """sum_t prod_{inner} G(v) prod_{leaves} H(v), for callables G, H."""
    return math.fsum(literal_product(t, G, H) for t in iter_subtrees(shape, cap))


def oracle_node_events(d, v, cap: int = DEFAULT_CAP) -> tuple[float, float, float]:
    """(Pr{v in tree}, Pr{v inner}, Pr{v leaf}) by summing over trees."""
    alpha = _alpha_table(d)
    in_tree, inner, leaf = [], [], []
    for t in iter_subtrees(d.shape, cap):
        p = literal_prob(d, t, alpha)
        if v in t.inner:
            inner.append(p)
            in_tree.append(p)
        elif v in t.leaves:
            leaf.append(p)
            in_tree.append(p)
    return math.fsum(in_tree), math.fsum(inner), math.fsum(leaf)


def oracle_kl(d, d2, cap: int = DEFAULT_CAP) -> float:
    """sum_t p(t) log(p(t) / p2(t)), +inf if p2 vanishes where p does not."""
    if d.shape != d2.shape:
        raise ShapeError("shape mismatch")
    table = enumeration_table(d.shape, cap)
    terms = []
    for lp, lq in zip(table.log_probs(d.alpha), table.log_probs(d2.alpha)):
        if lp == -math.inf:
            continue
        if lq == -math.inf:
            return math.inf
        terms.append(math.exp(lp) * (lp - lq))
    return math.fsum(terms)


def factorized_likelihood(g, h) -> Callable:
    """Tree-level likelihood ``(x, t) -> prod g(x, v) * prod h(x, v)`` from node factors."""

    def likelihood(x, t: FullSubtree) -> float:
        return literal_product(t, lambda v: g(x, v), lambda v: h(x, v))

    return likelihood


def oracle_posterior(d, likelihood: Callable, x=None, cap: int = DEFAULT_CAP) -> OracleReport:
    """Literal Bayes rule: p(t | x) = p(x | t) p(t) / sum_t' p(x | t') p(t').

    ``likelihood`` is called as ``likelihood(x, t)``.
    """
    table = enumeration_table(d.shape, cap)
    trees = table.trees
    priors = table.probs(d.alpha).tolist()
    likes = [float(likelihood(x, t)) for t in trees]
    marginal = math.fsum(p * lk for p, lk in zip(priors, likes))
    if marginal == 0:
        raise ZeroEvidenceError("observation has zero probability under every tree")
    rows = tuple(
        OracleRow(t, p, lk, p * lk / marginal) for t, p, lk in zip(trees, priors, likes)
    )
    best = max(rows, key=lambda r: r.posterior)
    return OracleReport(
        rows=rows,
        total=math.fsum(r.posterior for r in rows),
        max=best.posterior,
        argmax=best.tree,
        entropy=_entropy(r.posterior for r in rows),
        marginal=marginal,
    )
