"""Bottom-up folds over the base tree.

Every quantity here is a single pass from depth ``d_max`` up to the root.
Nodes of one depth form a contiguous block in the dense index, and the
children of that block are the next block reshaped to ``(-1, k)``, so each
level is one vectorized step and the call stack never grows with depth.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError, ShapeError
from .tree_core import BaseShape, format_node, node_values


def _level_blocks(shape: BaseShape):
    """Yield ``(parents, children)`` slices from the deepest inner level up."""
    for d in range(shape.d_max - 1, -1, -1):
        yield (
            slice(shape.level_start(d), shape.level_start(d + 1)),
            slice(shape.level_start(d + 1), shape.level_start(d + 2)),
        )


def _check_finite(shape, values, block, what, allow_posinf=False):
    bad = ~np.isfinite(values)
    if allow_posinf:
        bad &= values != np.inf
    if bad.any():
        i = block.start + int(np.argmax(bad))
        raise NumericError(f"{what}: non-finite value {values[bad][0]} at node {format_node(shape.node(i))}")


def _times(weight, x):
    # 0 * anything = 0: zero-probability branches never contribute.
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(weight == 0, 0.0, weight * x)


def _product_fold(shape, leaf_term, branch_weight, what):
    """phi(v) = leaf_term(v) + branch_weight(v) * prod(phi(children))."""
    phi = np.array(leaf_term, dtype=float)
    blk = slice(shape.level_start(shape.d_max), shape.num_nodes)
    _check_finite(shape, phi[blk], blk, what)
    for parents, kids in _level_blocks(shape):
        with np.errstate(over="ignore", invalid="ignore"):
            prod = phi[kids].reshape(-1, shape.k).prod(axis=1)
            phi[parents] = leaf_term[parents] + _times(branch_weight[parents], prod)
        _check_finite(shape, phi[parents], parents, what)
    return phi


def _sum_fold(shape, node_term, alpha, what, allow_posinf=False):
    """xi(v) = node_term(v) + alpha(v) * sum(xi(children))."""
    xi = np.array(node_term, dtype=float)
    blk = slice(shape.level_start(shape.d_max), shape.num_nodes)
    _check_finite(shape, xi[blk], blk, what, allow_posinf)
    for parents, kids in _level_blocks(shape):
        with np.errstate(over="ignore", invalid="ignore"):
            total = xi[kids].reshape(-1, shape.k).sum(axis=1)
            xi[parents] = node_term[parents] + _times(alpha[parents], total)
        _check_finite(shape, xi[parents], parents, what, allow_posinf)
    return xi


def _max_fold(alpha, shape):
    """psi(v) = max(1 - alpha, alpha * prod(psi(children))); also returns the flags."""
    stay = 1.0 - alpha
    psi = stay.copy()
    expand = np.zeros(shape.num_nodes, dtype=bool)
    for parents, kids in _level_blocks(shape):
        grow = alpha[parents] * psi[kids].reshape(-1, shape.k).prod(axis=1)
        flag = stay[parents] < grow
        expand[parents] = flag
        psi[parents] = np.where(flag, grow, stay[parents])
    return psi, expand


def tree_sum(shape: BaseShape, G, H) -> float:
    """Sum over all full subtrees of prod_{inner} G(v) * prod_{leaves} H(v).

    ``G`` and ``H`` are node functions (callable, mapping or dense array).
    ``G`` is only consulted on base-tree inner nodes.
    """
    g = node_values(shape, G, "G", leaves=0.0)
    h = node_values(shape, H, "H")
    phi = np.array(h)
    blk = slice(shape.level_start(shape.d_max), shape.num_nodes)
    _check_finite(shape, phi[blk], blk, "tree_sum")
    for parents, kids in _level_blocks(shape):
        with np.errstate(over="ignore", invalid="ignore"):
            phi[parents] = h[parents] + g[parents] * phi[kids].reshape(-1, shape.k).prod(axis=1)
        _check_finite(shape, phi[parents], parents, "tree_sum")
    return float(phi[0])


def expect_product(d, g, h) -> float:
    """E[f(T)] for f(t) = prod_{inner} g(v) * prod_{leaves} h(v)."""
    alpha = d.alpha
    gv = node_values(d.shape, g, "g", leaves=0.0)
    hv = node_values(d.shape, h, "h")
    phi = _product_fold(d.shape, _times(1.0 - alpha, hv), _times(alpha, gv), "expect_product")
    return float(phi[0])


def expect_sum(d, g, h) -> float:
    """E[f(T)] for f(t) = sum_{inner} g(v) + sum_{leaves} h(v)."""
    alpha = d.alpha
    gv = node_values(d.shape, g, "g", leaves=0.0)
    hv = node_values(d.shape, h, "h")
    term = _times(1.0 - alpha, hv) + _times(alpha, gv)
    return float(_sum_fold(d.shape, term, alpha, "expect_sum")[0])


def _xlogx(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(p), 0.0)


def entropy(d, base: float = math.e) -> float:
    """Shannon entropy H[T] = -sum p(t) log p(t), in units of ``log(base)``."""
    alpha = d.alpha
    term = -_xlogx(1.0 - alpha) + -_xlogx(alpha)
    nats = float(_sum_fold(d.shape, term, alpha, "entropy")[0])
    if base == math.e:
        return nats
    return nats / math.log(base)


def _bernoulli_kl(a, b):
    """Per-node KL(Bernoulli(a) || Bernoulli(b)), with 0 log 0 = 0 and p log(p/0) = +inf.

    The stop branch uses ``log1p`` so that tiny ``b`` is not lost when
    ``1 - b`` rounds to 1.  Each term is a KL divergence, hence >= 0; the
    clamp only absorbs rounding.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        grow = a * (np.log(a) - np.log(b))
        stay = (1.0 - a) * (np.log1p(-a) - np.log1p(-b))
    grow = np.where(a == 0, 0.0, np.where(b == 0, np.inf, grow))
    stay = np.where(a == 1, 0.0, np.where(b == 1, np.inf, stay))
    return np.maximum(grow + stay, 0.0)


def kl_divergence(d, d2, base: float = math.e) -> float:
    """KL(d || d2); +inf when d is not absolutely continuous w.r.t. d2."""
    if d.shape != d2.shape:
        raise ShapeError(f"shape mismatch: {d.shape} vs {d2.shape}")
    term = _bernoulli_kl(d.alpha, d2.alpha)
    kl = float(_sum_fold(d.shape, term, d.alpha, "kl_divergence", allow_posinf=True)[0])
    if base != math.e and math.isfinite(kl):
        kl /= math.log(base)
    return kl


def tree_max_value(d) -> float:
    """max_t p(t), computed by the max-product fold."""
    psi, _ = _max_fold(d.alpha, d.shape)
    return float(psi[0])
