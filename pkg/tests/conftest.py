"""Shared fixtures, random-instance builders and hypothesis strategies."""

from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from treeprior import BaseShape, TreeDistribution

# Wall-clock deadlines make property tests flaky on loaded machines.
settings.register_profile("default", deadline=None)
settings.load_profile("default")

# Shapes small enough to enumerate in full (|T| <= 730).
ORACLE_SHAPES = [(1, 5), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 2)]

REF_ALPHA = {(): 0.7, (0,): 0.4, (1,): 0.8}
REF_PROBS = [0.3, 0.084, 0.056, 0.336, 0.224]


@pytest.fixture
def ref_shape():
    return BaseShape(2, 2)


@pytest.fixture
def ref(ref_shape):
    return TreeDistribution(ref_shape, REF_ALPHA)


def random_alpha(shape: BaseShape, rng: np.random.Generator, edge_rate: float = 0.1) -> np.ndarray:
    """Uniform alpha on inner nodes, with some entries snapped to exactly 0 or 1."""
    a = rng.random(shape.num_nodes)
    snap = rng.random(shape.num_nodes) < edge_rate
    a[snap] = rng.integers(0, 2, snap.sum())
    a[shape.num_inner:] = 0.0
    return a


def random_dist(shape: BaseShape, rng: np.random.Generator, edge_rate: float = 0.1) -> TreeDistribution:
    return TreeDistribution(shape, random_alpha(shape, rng, edge_rate))


@st.composite
def shapes(draw, max_trees_shapes=ORACLE_SHAPES):
    k, d_max = draw(st.sampled_from(max_trees_shapes))
    return BaseShape(k, d_max)


@st.composite
def distributions(draw, shape_list=ORACLE_SHAPES):
    """A TreeDistribution on an enumerable shape, alpha drawn per inner node."""
    shape = draw(shapes(shape_list))
    unit = st.one_of(
        st.floats(0.0, 1.0, allow_nan=False),
        st.sampled_from([0.0, 1.0, 0.5]),
    )
    inner = draw(st.lists(unit, min_size=shape.num_inner, max_size=shape.num_inner))
    alpha = np.zeros(shape.num_nodes)
    alpha[: shape.num_inner] = inner
    return TreeDistribution(shape, alpha)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdict lines at the end of the run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
