"""Most probable tree: flag pass followed by top-down backtracking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .recursions import _max_fold
from .tree_core import ROOT, FullSubtree, NodeId


@dataclass(frozen=True)
class FlagAssignment:
    """Per-node expansion flags and max-fold values, in node-index order.

    ``delta[i]`` is set iff expanding node ``i`` strictly beats stopping
    there, i.e. ``1 - alpha < alpha * prod(psi(children))``.  Ties stop,
    which makes the mode the shallowest maximizer.
    """

    shape: object
    delta: np.ndarray
    psi: np.ndarray

    def flag(self, v: NodeId) -> int:
        return int(self.delta[self.shape.index(v)])

    def value(self, v: NodeId) -> float:
        return float(self.psi[self.shape.index(v)])


class Mode(NamedTuple):
    tree: FullSubtree
    value: float


def flag_calculation(d) -> FlagAssignment:
    psi, delta = _max_fold(d.alpha, d.shape)
    psi.flags.writeable = False
    delta.flags.writeable = False
    return FlagAssignment(d.shape, delta, psi)


def backtrack(flags: FlagAssignment) -> FullSubtree:
    """Expand exactly the flagged nodes reachable through flagged ancestors."""
    shape = flags.shape
    edges = set()
    stack = [ROOT]
    while stack:
        v = stack.pop()
        if not flags.delta[shape.index(v)]:
            continue
        kids = [v + (i,) for i in range(shape.k)]
        edges.update((v, c) for c in kids)
        stack.extend(reversed(kids))
    inner = {parent for parent, _ in edges}
    return FullSubtree(shape, inner)


def mode(d) -> Mode:
    """The most probable tree and its probability."""
    flags = flag_calculation(d)
    return Mode(backtrack(flags), float(flags.psi[0]))
