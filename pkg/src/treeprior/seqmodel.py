"""Bayesian context-tree model for symbol sequences (CTW-style).

Each node of the base tree is a context: the path ``(x[n-1], x[n-2], ...)``
of most recent symbols, most recent first.  Every node keeps symbol counts
and predicts with the Krichevsky-Trofimov estimator.  The tree prior is
updated per symbol along the single context path of that symbol, so one
step costs O(d_max).
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .bayes import _path_update
from .distribution import TreeDistribution
from .errors import ParameterError, ZeroEvidenceError
from .mode import mode
from .oracle import literal_prob
from .tree_core import BaseShape, FullSubtree, NodeId, enumerate_subtrees


def _check_symbol(x, alphabet_size: int) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)) or not 0 <= x < alphabet_size:
        raise ParameterError(f"symbol {x!r} outside alphabet {{0, ..., {alphabet_size - 1}}}")
    return int(x)


def context_path(history: Sequence[int], d_max: int, pad: int = 0, alphabet_size: int = 2) -> NodeId:
    """Node addressed by the last ``d_max`` symbols, most recent first.

    Histories shorter than ``d_max`` are padded with ``pad`` on the far side.
    """
    recent = list(history)[-d_max:] if d_max > 0 else []
    for x in recent:
        _check_symbol(x, alphabet_size)
    _check_symbol(pad, alphabet_size)
    path = [int(x) for x in reversed(recent)]
    return tuple(path + [pad] * (d_max - len(path)))


def kt_predictive(counts: Sequence[int], symbol: int) -> float:
    """(counts[symbol] + 1/2) / (sum(counts) + |alphabet| / 2)."""
    m = len(counts)
    _check_symbol(symbol, m)
    return (counts[symbol] + 0.5) / (sum(counts) + m / 2)


def kt_block_log_prob(counts: Sequence[int]) -> float:
    """log of the KT probability of any sequence with these symbol counts.

    Closed form ``Gamma(m/2) prod Gamma(c + 1/2) / (Gamma(1/2)**m Gamma(n + m/2))``.
    """
    m = len(counts)
    n = sum(counts)
    return (
        math.lgamma(m / 2)
        + math.fsum(math.lgamma(c + 0.5) for c in counts)
        - m * math.lgamma(0.5)
        - math.lgamma(n + m / 2)
    )


class ContextTreeModel:
    """Mutable sequential state: tree posterior, per-node counts, recent history."""

    def __init__(self, d_max: int, alphabet_size: int = 2, alpha=0.5, pad: int = 0):
        if alphabet_size < 2:
            raise ParameterError("alphabet_size must be >= 2")
        self.shape = BaseShape(alphabet_size, d_max)
        self.alphabet_size = alphabet_size
        self.pad = _check_symbol(pad, alphabet_size)
        if isinstance(alpha, TreeDistribution):
            if alpha.shape != self.shape:
                raise ParameterError(f"prior shape {alpha.shape} does not match {self.shape}")
            prior = alpha
        else:
            prior = TreeDistribution.uniform(self.shape, alpha)
        self._alpha = np.array(prior.alpha)
        self.counts = np.zeros((self.shape.num_nodes, alphabet_size), dtype=np.int64)
        self.history = deque(maxlen=d_max)
        self.n_symbols = 0
        self.log_loss = 0.0

    @property
    def dist(self) -> TreeDistribution:
        """Snapshot of the current posterior over context trees."""
        return TreeDistribution(self.shape, self._alpha)

    def path_indices(self, v_end: NodeId) -> list[int]:
        return [self.shape.index(v_end[:i]) for i in range(len(v_end) + 1)]

    def process_symbol(self, x: int, history: Sequence[int] | None = None) -> float:
        """Condition on symbol ``x``; return its natural-log predictive probability.

        ``history`` defaults to the symbols this model has already seen.
        """
        x = _check_symbol(x, self.alphabet_size)
        hist = self.history if history is None else history
        v_end = context_path(hist, self.shape.d_max, self.pad, self.alphabet_size)
        idx = self.path_indices(v_end)
        h_prime = [kt_predictive(self.counts[i], x) for i in idx]
        lq, _, _ = _path_update(self._alpha, idx, h_prime)
        if lq == -math.inf:
            raise ZeroEvidenceError(f"symbol {x} at position {self.n_symbols} has zero probability")
        self.counts[idx, x] += 1
        if history is None:
            self.history.append(x)
        self.n_symbols += 1
        self.log_loss -= lq
        return lq

    @property
    def code_length_bits(self) -> float:
        return self.log_loss / math.log(2)


class SequenceResult(NamedTuple):
    model: ContextTreeModel
    bits: float
    map_tree: FullSubtree
    map_prob: float


def evaluate_sequence(model: ContextTreeModel, xs: Iterable[int]) -> SequenceResult:
    """Process ``xs`` in order; return the code length in bits and the MAP context tree.

    ``bits`` counts only the symbols in ``xs``; ``model.code_length_bits``
    keeps the running total across calls.
    """
    nats = 0.0
    for x in xs:
        nats -= model.process_symbol(x)
    best = mode(model.dist)
    return SequenceResult(model, nats / math.log(2), best.tree, best.value)


def mixture_log_prob(xs: Sequence[int], prior: TreeDistribution, pad: int = 0) -> float:
    """Batch log p(xs) = log sum_t p(t) prod_{leaves} KT(block at leaf), by enumeration.

    Independent of the sequential update: each tree's likelihood comes from
    the closed-form KT block probability of the symbols whose context falls
    in each of its leaves.
    """
    shape = prior.shape
    m = shape.k
    contexts = []
    hist: list[int] = []
    for x in xs:
        contexts.append((context_path(hist, shape.d_max, pad, m), _check_symbol(x, m)))
        hist.append(x)
    terms = []
    for t in enumerate_subtrees(shape):
        p = literal_prob(prior, t)
        if p == 0:
            continue
        blocks = {leaf: [0] * m for leaf in t.leaves}
        for ctx, x in contexts:
            leaf = next(ctx[:j] for j in range(len(ctx) + 1) if ctx[:j] in blocks)
            blocks[leaf][x] += 1
        terms.append(math.log(p) + math.fsum(kt_block_log_prob(c) for c in blocks.values()))
    hi = max(terms)
    return hi + math.log(math.fsum(math.exp(s - hi) for s in terms))


def markov_source(n: int, flip: float = 0.1, rng=None) -> list[int]:
    """Binary first-order Markov chain that repeats the last symbol w.p. ``1 - flip``."""
    rng = np.random.default_rng(rng)
    if n == 0:
        return []
    out = np.empty(n, dtype=np.int64)
    out[0] = rng.integers(2)
    flips = rng.random(n - 1) < flip
    for i in range(1, n):
        out[i] = out[i - 1] ^ flips[i - 1]
    return out.tolist()
