"""Bayesian updates: Beta hyperparameters on alpha, and posteriors over trees.

Two independent pieces live here.  :func:`beta_posterior` treats an observed
tree as data about ``alpha``.  :func:`posterior_general` and
:func:`posterior_path` treat ``alpha`` as fixed and condition the tree on an
observation whose likelihood factorizes over inner and leaf nodes; the
posterior then has the same parametric form with updated ``alpha``.

Marginal likelihoods are carried in log space so that long sequential
updates do not underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np

from .distribution import TreeDistribution
from .errors import ParameterError, ShapeError, ZeroEvidenceError
from .recursions import _level_blocks
from .tree_core import BaseShape, FullSubtree, NodeId, format_node, node_values

# --- conjugate Beta prior on alpha -------------------------------------------


@dataclass(frozen=True, eq=False)
class BetaHyperparams:
    """Independent ``Beta(beta[v], gamma[v])`` priors on each ``alpha[v]``."""

    shape: BaseShape
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        for name in ("beta", "gamma"):
            arr = node_values(self.shape, getattr(self, name), name)
            bad = ~(arr > 0) | ~np.isfinite(arr)
            if bad.any():
                i = int(np.argmax(bad))
                raise ParameterError(
                    f"{name} at node {format_node(self.shape.node(i))} is {arr[i]!r}; must be > 0"
                )
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, shape: BaseShape, beta: float = 1.0, gamma: float = 1.0) -> "BetaHyperparams":
        n = shape.num_nodes
        return cls(shape, np.full(n, float(beta)), np.full(n, float(gamma)))

    def mean(self) -> TreeDistribution:
        """Posterior-mean ``alpha`` (``beta / (beta + gamma)``), base leaves pinned to 0."""
        return TreeDistribution(self.shape, self.beta / (self.beta + self.gamma), strict=False)

    def __eq__(self, other):
        if not isinstance(other, BetaHyperparams):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.gamma, other.gamma)
        )

    __hash__ = None


def beta_posterior(h: BetaHyperparams, t: FullSubtree) -> BetaHyperparams:
    """Add one to ``beta`` at the inner nodes of ``t`` and to ``gamma`` at its leaves."""
    if t.shape != h.shape:
        raise ShapeError(f"subtree shape {t.shape} does not match hyperparameter shape {h.shape}")
    t.checked()
    beta = h.beta.copy()
    gamma = h.gamma.copy()
    beta[[h.shape.index(v) for v in t.inner]] += 1.0
    gamma[[h.shape.index(v) for v in t.leaves]] += 1.0
    return BetaHyperparams(h.shape, beta, gamma)


# --- posterior over trees ----------------------------------------------------

@dataclass(frozen=True)
class LikelihoodSpec:
    """p(x | t) = prod_{inner} g(x, v) * prod_{leaves} h(x, v).

    ``g`` and ``h`` are callables ``(x, node) -> float``, or per-node tables
    (mapping or dense array) already evaluated at the observation.  They
    need not be normalized densities.
    """

    g: Any
    h: Any

    def evaluate(self, shape: BaseShape, x) -> tuple[np.ndarray, np.ndarray]:
        g = node_values(shape, _bind(self.g, x), "g", leaves=1.0)
        h = node_values(shape, _bind(self.h, x), "h")
        for name, arr in (("g", g), ("h", h)):
            bad = ~(arr >= 0) | ~np.isfinite(arr)
            if bad.any():
                i = int(np.argmax(bad))
                raise ParameterError(
                    f"likelihood factor {name} at node {format_node(shape.node(i))} is {arr[i]!r}; "
                    "must be finite and >= 0"
                )
        return g, h


def _bind(f, x):
    if callable(f) and not hasattr(f, "__len__") and not hasattr(f, "keys"):
        return lambda v: f(x, v)
    return f


@dataclass(frozen=True)
class PathLikelihoodSpec:
    """Likelihood whose only non-unit factors are ``h`` on one root-to-leaf path.

    ``v_end`` is a base-tree leaf.  ``h_prime`` is a callable
    ``(x, node) -> float`` or a mapping keyed by the path nodes; it is only
    ever evaluated on the ``d_max + 1`` nodes from the root to ``v_end``.
    """

    v_end: NodeId
    h_prime: Any

    def path(self) -> list[NodeId]:
        return [self.v_end[:i] for i in range(len(self.v_end) + 1)]

    def factors(self, x) -> list[float]:
        if hasattr(self.h_prime, "keys"):
            return [float(self.h_prime.get(v, 1.0)) for v in self.path()]
        return [float(self.h_prime(x, v)) for v in self.path()]

    def as_general(self) -> LikelihoodSpec:
        """The equivalent node-factorized likelihood, for cross-checking."""
        on_path = set(self.path())
        factors = self.factors

        def h(x, v):
            if v not in on_path:
                return 1.0
            return factors(x)[len(v)]

        return LikelihoodSpec(g=lambda x, v: 1.0, h=h)


class Posterior(NamedTuple):
    dist: TreeDistribution
    marginal: float
    log_marginal: float
    nodes_touched: int
    degenerate: tuple = ()


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def posterior_general(d: TreeDistribution, like: LikelihoodSpec, x=None) -> Posterior:
    """Posterior p(t | x) and marginal p(x), for any node-factorized likelihood.

    With ``q(v)`` the marginal likelihood of the data below ``v``,

        q(v) = (1 - alpha) h(v) + alpha g(v) prod q(children)

    and the posterior expansion probability is the second term's share of
    ``q(v)``.  Inner nodes where ``q(v) = 0`` get posterior ``alpha = 0``
    and are listed in ``degenerate``; they carry no posterior mass.
    """
    shape = d.shape
    g, h = like.evaluate(shape, x)
    with np.errstate(divide="ignore"):
        log_g, log_h = np.log(g), np.log(h)
        log_a, log_1a = np.log(d.alpha), np.log1p(-d.alpha)
    log_q = log_h.copy()
    post = np.zeros(shape.num_nodes)
    for parents, kids in _level_blocks(shape):
        grow = log_a[parents] + log_g[parents] + log_q[kids].reshape(-1, shape.k).sum(axis=1)
        stay = log_1a[parents] + log_h[parents]
        lq = np.logaddexp(grow, stay)
        log_q[parents] = lq
        with np.errstate(invalid="ignore"):
            post[parents] = np.where(lq == -np.inf, 0.0, np.minimum(1.0, np.exp(grow - lq)))
    if log_q[0] == -np.inf:
        raise ZeroEvidenceError("observation has zero probability under every tree")
    inner = slice(0, shape.num_inner)
    degenerate = tuple(shape.node(int(i)) for i in np.flatnonzero(log_q[inner] == -np.inf))
    lm = float(log_q[0])
    return Posterior(TreeDistribution(shape, post), math.exp(lm), lm, shape.num_nodes, degenerate)


def _path_indices(shape: BaseShape, v_end: NodeId) -> list[int]:
    shape.check_node(v_end)
    if not shape.is_leaf(v_end):
        raise ShapeError(f"v_end {format_node(v_end)} must be a base-tree leaf (depth {shape.d_max})")
    return [shape.index(v_end[:i]) for i in range(len(v_end) + 1)]


def _path_update(alpha: np.ndarray, indices: Sequence[int], h_prime: Sequence[float]):
    """Update ``alpha`` in place along one root-to-leaf path.

    Returns ``(log q(root), nodes_touched, degenerate_indices)``.
    """
    for j, hv in enumerate(h_prime):
        if not (hv >= 0 and math.isfinite(hv)):
            raise ParameterError(f"h' at path depth {j} is {hv!r}; must be finite and >= 0")
    lq = _log(h_prime[-1])
    touched = 1
    degenerate = []
    for j in range(len(indices) - 2, -1, -1):
        i = indices[j]
        a = float(alpha[i])
        grow = _log(a) + lq
        stay = _log(1.0 - a) + _log(h_prime[j])
        lq = _logaddexp(grow, stay)
        if lq == -math.inf:
            alpha[i] = 0.0
            degenerate.append(i)
        else:
            alpha[i] = min(1.0, math.exp(grow - lq))
        touched += 1
    return lq, touched, degenerate


def posterior_path(d: TreeDistribution, like: PathLikelihoodSpec, x=None) -> Posterior:
    """Posterior when only ``h`` on the path to ``like.v_end`` differs from 1.

    Only the ``d_max + 1`` nodes on the path are evaluated and updated; all
    other ``alpha`` values are carried over unchanged.
    """
    shape = d.shape
    indices = _path_indices(shape, like.v_end)
    alpha = np.array(d.alpha)
    lq, touched, degenerate = _path_update(alpha, indices, like.factors(x))
    if lq == -math.inf:
        raise ZeroEvidenceError("observation has zero probability under every tree")
    return Posterior(
        TreeDistribution(shape, alpha),
        math.exp(lq),
        lq,
        touched,
        tuple(shape.node(i) for i in degenerate),
    )


class SequentialPosterior(NamedTuple):
    dist: TreeDistribution
    log_marginal: float


def sequential_update(d: TreeDistribution, observations) -> SequentialPosterior:
    """Fold :func:`posterior_path` over ``(PathLikelihoodSpec, x)`` pairs.

    Returns the final posterior and the summed log marginals, which by the
    chain rule is the joint log likelihood of the whole sequence.
    """
    shape = d.shape
    alpha = np.array(d.alpha)
    total = 0.0
    for n, (like, x) in enumerate(observations):
        lq, _, _ = _path_update(alpha, _path_indices(shape, like.v_end), like.factors(x))
        if lq == -math.inf:
            err = ZeroEvidenceError(f"observation {n} has zero probability under every tree")
            err.step = n
            raise err
        total += lq
    return SequentialPosterior(TreeDistribution(shape, alpha), total)


__all__ = [
    "BetaHyperparams",
    "LikelihoodSpec",
    "PathLikelihoodSpec",
    "Posterior",
    "SequentialPosterior",
    "beta_posterior",
    "posterior_general",
    "posterior_path",
    "sequential_update",
]
