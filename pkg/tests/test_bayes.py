"""Conjugate Beta update and posteriors over trees."""

import math

import numpy as np
import pytest
from conftest import distributions, random_dist
from hypothesis import given, settings
from hypothesis import strategies as st

from treeprior import (
    BaseShape,
    BetaHyperparams,
    FullSubtree,
    LikelihoodSpec,
    ParameterError,
    PathLikelihoodSpec,
    ShapeError,
    TreeDistribution,
    ZeroEvidenceError,
    beta_posterior,
    enumerate_subtrees,
    posterior_general,
    posterior_path,
    prob,
    sample,
    sequential_update,
    total_mass,
)
from treeprior.oracle import factorized_likelihood, literal_product, oracle_posterior


def table_likelihood(shape, g, h):
    """LikelihoodSpec from dense arrays plus the matching literal tree likelihood."""
    spec = LikelihoodSpec(g=g, h=h)
    literal = factorized_likelihood(lambda x, v: g[shape.index(v)], lambda x, v: h[shape.index(v)])
    return spec, literal


def assert_matches_bayes(d, spec, literal, x=None, tol=1e-10):
    post = posterior_general(d, spec, x)
    report = oracle_posterior(d, literal, x)
    assert post.marginal == pytest.approx(report.marginal, rel=tol, abs=1e-300)
    for row in report.rows:
        assert prob(post.dist, row.tree) == pytest.approx(row.posterior, abs=tol)
    return post


class TestBetaPosterior:
    def test_root_only(self, ref_shape):
        h = BetaHyperparams.uniform(ref_shape)
        h2 = beta_posterior(h, FullSubtree(ref_shape))
        assert h2.gamma[0] == 2.0
        assert h2.gamma[1:].tolist() == [1.0] * 6
        assert h2.beta.tolist() == [1.0] * 7

    def test_tau3(self, ref_shape):
        h = BetaHyperparams.uniform(ref_shape)
        h2 = beta_posterior(h, FullSubtree(ref_shape, [(), (1,)]))
        beta_up = {v for v in ref_shape.nodes() if h2.beta[ref_shape.index(v)] == 2.0}
        gamma_up = {v for v in ref_shape.nodes() if h2.gamma[ref_shape.index(v)] == 2.0}
        assert beta_up == {(), (1,)}
        assert gamma_up == {(0,), (1, 0), (1, 1)}

    def test_updates_commute(self, ref_shape):
        h = BetaHyperparams.uniform(ref_shape, 0.5, 2.0)
        t1 = FullSubtree(ref_shape, [(), (1,)])
        t2 = FullSubtree(ref_shape, [(), (0,)])
        assert beta_posterior(beta_posterior(h, t1), t2) == beta_posterior(beta_posterior(h, t2), t1)

    def test_does_not_mutate(self, ref_shape):
        h = BetaHyperparams.uniform(ref_shape)
        beta_posterior(h, FullSubtree(ref_shape, [()]))
        assert h == BetaHyperparams.uniform(ref_shape)

    def test_validation(self, ref_shape):
        with pytest.raises(ParameterError, match="beta"):
            BetaHyperparams(ref_shape, np.zeros(7), np.ones(7))
        h = BetaHyperparams.uniform(ref_shape)
        with pytest.raises(ShapeError):
            beta_posterior(h, FullSubtree(BaseShape(2, 3)))

    def test_mean_is_a_distribution(self, ref_shape):
        h = BetaHyperparams.uniform(ref_shape, 3.0, 1.0)
        d = h.mean()
        assert d[()] == 0.75 and d[(1, 1)] == 0.0

    def test_mean_converges_to_expansion_frequency(self, ref):
        rng = np.random.default_rng(2024)
        h = BetaHyperparams.uniform(ref.shape)
        for t in sample(ref, rng=rng, size=4000):
            h = beta_posterior(h, t)
        est = h.mean()
        # Conditional expansion frequency at every reachable inner node.
        for v in [(), (0,), (1,)]:
            assert est[v] == pytest.approx(ref[v], abs=0.04)


class TestPosteriorGeneral:
    def test_uninformative(self, ref):
        post = posterior_general(ref, LikelihoodSpec(g=lambda x, v: 1.0, h=lambda x, v: 1.0))
        np.testing.assert_allclose(post.dist.alpha, ref.alpha, atol=1e-15)
        assert post.marginal == pytest.approx(1.0, abs=1e-15)

    def test_constant_h_is_a_tree_statistic(self, ref):
        c = 0.5
        post = posterior_general(ref, LikelihoodSpec(g=lambda x, v: 1.0, h=lambda x, v: c))
        spec, literal = table_likelihood(ref.shape, np.ones(7), np.full(7, c))
        assert_matches_bayes(ref, spec, literal)
        # c^{|leaves|} depends on the tree, so the marginal is E[c^{|L|}].
        want = math.fsum(prob(ref, t) * c ** len(t.leaves) for t in enumerate_subtrees(ref.shape))
        assert post.marginal == pytest.approx(want, rel=1e-14)

    def test_callable_with_observation(self, ref):
        spec = LikelihoodSpec(g=lambda x, v: x ** len(v), h=lambda x, v: 1.0 + x * len(v))
        literal = factorized_likelihood(spec.g, spec.h)
        for x in [0.0, 0.5, 2.0]:
            assert_matches_bayes(ref, spec, literal, x)

    @given(distributions(), st.data())
    @settings(max_examples=60, deadline=None)
    def test_against_bayes_rule(self, d, data):
        n = d.shape.num_nodes
        # Factors stay clear of the subnormal range, where the linear-scale oracle underflows.
        vals = st.one_of(st.floats(1e-6, 3.0), st.just(0.0))
        g = np.array(data.draw(st.lists(vals, min_size=n, max_size=n)))
        h = np.array(data.draw(st.lists(vals, min_size=n, max_size=n)))
        spec, literal = table_likelihood(d.shape, g, h)
        try:
            report = oracle_posterior(d, literal)
        except ZeroEvidenceError:
            # The linear-scale oracle can underflow to zero (subnormal alpha);
            # the log-space fold may then still see a positive, tiny evidence.
            try:
                post = posterior_general(d, spec)
            except ZeroEvidenceError:
                return
            assert post.log_marginal < math.log(1e-250)
            return
        if report.marginal < 1e-250:
            return  # below where relative comparisons are meaningful
        post = assert_matches_bayes(d, spec, literal)
        assert abs(total_mass(post.dist) - 1.0) <= 1e-12
        assert post.dist.alpha[d.shape.num_inner:].max(initial=0.0) == 0.0
        assert ((post.dist.alpha >= 0) & (post.dist.alpha <= 1)).all()

    def test_zero_evidence(self, ref):
        with pytest.raises(ZeroEvidenceError):
            posterior_general(ref, LikelihoodSpec(g=lambda x, v: 0.0, h=lambda x, v: 0.0))

    def test_degenerate_nodes_flagged(self, ref):
        # Everything below v0 is impossible, but stopping at the root is not.
        h = lambda x, v: 0.0 if v and v[0] == 0 else 1.0
        post = posterior_general(ref, LikelihoodSpec(g=lambda x, v: 1.0, h=h))
        assert post.degenerate == ((0,),)
        assert post.dist[(0,)] == 0.0
        assert post.dist[()] == 0.0
        assert prob(post.dist, FullSubtree(ref.shape)) == 1.0

    def test_rejects_negative_factor(self, ref):
        with pytest.raises(ParameterError, match="h"):
            posterior_general(ref, LikelihoodSpec(g=lambda x, v: 1.0, h=lambda x, v: -1.0))

    def test_input_not_mutated(self, ref):
        before = ref.alpha.copy()
        posterior_general(ref, LikelihoodSpec(g=lambda x, v: 2.0, h=lambda x, v: 0.3))
        assert np.array_equal(ref.alpha, before)

    def test_small_likelihoods_do_not_underflow(self):
        shape = BaseShape(2, 3)
        d = TreeDistribution.uniform(shape, 1.0)
        post = posterior_general(d, LikelihoodSpec(g=lambda x, v: 1.0, h=lambda x, v: 1e-200))
        # Only the full tree has mass; its 8 leaves give 1e-1600, far below float range.
        assert post.log_marginal == pytest.approx(8 * math.log(1e-200), rel=1e-14)
        assert post.marginal == 0.0
        assert post.dist == d


class TestPosteriorPath:
    def test_uninformative(self, ref):
        post = posterior_path(ref, PathLikelihoodSpec((1, 1), lambda x, v: 1.0))
        assert post.dist == ref
        assert post.marginal == 1.0
        assert post.nodes_touched == 3

    def test_matches_general_ref(self, ref):
        like = PathLikelihoodSpec((1, 1), {(): 0.9, (1,): 0.3, (1, 1): 2.5})
        p = posterior_path(ref, like)
        g = posterior_general(ref, like.as_general())
        np.testing.assert_allclose(p.dist.alpha, g.dist.alpha, rtol=0, atol=1e-12)
        assert p.marginal == pytest.approx(g.marginal, rel=1e-12)
        assert p.dist[(0,)] == ref[(0,)]

    @pytest.mark.parametrize("k,d_max", [(1, 5), (2, 2), (2, 3), (3, 3), (4, 2), (2, 8)])
    def test_touches_only_path(self, k, d_max):
        shape = BaseShape(k, d_max)
        rng = np.random.default_rng(k + 31 * d_max)
        d = random_dist(shape, rng, edge_rate=0.0)
        v_end = tuple(int(i) for i in rng.integers(0, k, d_max))
        evaluated = []

        def h_prime(x, v):
            evaluated.append(v)
            return float(rng.uniform(0.1, 2.0))

        post = posterior_path(d, PathLikelihoodSpec(v_end, h_prime))
        assert post.nodes_touched == d_max + 1
        assert sorted(evaluated, key=len) == [v_end[:i] for i in range(d_max + 1)]
        on_path = {shape.index(v_end[:i]) for i in range(d_max + 1)}
        off = [i for i in range(shape.num_nodes) if i not in on_path]
        assert np.array_equal(post.dist.alpha[off], d.alpha[off])

    def test_rejects_non_leaf_end(self, ref):
        with pytest.raises(ShapeError, match="leaf"):
            posterior_path(ref, PathLikelihoodSpec((1,), lambda x, v: 1.0))

    def test_zero_evidence(self, ref):
        with pytest.raises(ZeroEvidenceError):
            posterior_path(ref, PathLikelihoodSpec((0, 0), lambda x, v: 0.0))


def random_path_like(shape, rng):
    v_end = tuple(int(i) for i in rng.integers(0, shape.k, shape.d_max))
    table = {v_end[:i]: float(rng.uniform(0.05, 2.0)) for i in range(shape.d_max + 1)}
    return PathLikelihoodSpec(v_end, table)


class TestSequential:
    def test_empty(self, ref):
        res = sequential_update(ref, [])
        assert res.dist == ref and res.log_marginal == 0.0

    def test_single_step_matches_path(self, ref):
        like = PathLikelihoodSpec((0, 1), {(): 0.5, (0,): 2.0, (0, 1): 0.7})
        res = sequential_update(ref, [(like, None)])
        post = posterior_path(ref, like)
        assert res.dist == post.dist
        assert res.log_marginal == post.log_marginal

    @pytest.mark.parametrize("k,d_max", [(2, 2), (2, 3), (3, 2)])
    def test_matches_joint_bayes(self, k, d_max):
        shape = BaseShape(k, d_max)
        rng = np.random.default_rng(k * 7 + d_max)
        d = random_dist(shape, rng, edge_rate=0.0)
        likes = [random_path_like(shape, rng) for _ in range(4)]
        res = sequential_update(d, [(lk, None) for lk in likes])

        def joint(x, t):
            out = 1.0
            for lk in likes:
                f = lk.h_prime
                out *= literal_product(t, lambda v: 1.0, lambda v: f.get(v, 1.0))
            return out

        report = oracle_posterior(d, joint)
        assert res.log_marginal == pytest.approx(math.log(report.marginal), rel=1e-12)
        for row in report.rows:
            assert prob(res.dist, row.tree) == pytest.approx(row.posterior, abs=1e-10)

    def test_zero_evidence_reports_step(self, ref):
        ok = PathLikelihoodSpec((0, 0), lambda x, v: 1.0)
        bad = PathLikelihoodSpec((1, 1), lambda x, v: 0.0)
        with pytest.raises(ZeroEvidenceError) as err:
            sequential_update(ref, [(ok, None), (ok, None), (bad, None)])
        assert err.value.step == 2

    def test_long_stream_stays_finite(self):
        shape = BaseShape(2, 4)
        rng = np.random.default_rng(0)
        d = TreeDistribution.uniform(shape, 0.5)
        likes = [(random_path_like(shape, rng), None) for _ in range(5000)]
        res = sequential_update(d, likes)
        assert math.isfinite(res.log_marginal)
        assert abs(total_mass(res.dist) - 1.0) <= 1e-12
