import numpy as np
import pytest

from conftest import edgeless, new_rng, random_graph
from vtprune import PruneConfig, select_tokens
from vtprune.graph import AdjacencyGraph, build_graph
from vtprune.selection import (
    TAG_FALLBACK,
    TAG_MIS,
    TAG_PIVOT,
    SelectionResult,
    pivot_count,
)


def chain(n):
    return AdjacencyGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete(n):
    return AdjacencyGraph.from_edges(
        n, [(i, j) for i in range(n) for j in range(i + 1, n)])


class TestPivotCount:
    def test_default_ratio(self):
        assert pivot_count(2, 0.7) == 1

    def test_pure_diversity(self):
        assert pivot_count(10, 0.0) == 0

    def test_pure_importance(self):
        assert pivot_count(10, 1.0) == 10

    def test_guard_against_float_error(self):
        assert pivot_count(10, 0.3) == 3


class TestHandTraces:
    def test_chain_trace(self):
        res = select_tokens(np.array([0.9, 0.8, 0.7, 0.6]), chain(4), 2, 0.5)
        assert res.kept == (0, 2)
        assert res.pivots == (0,)
        assert res.provenance == (TAG_PIVOT, TAG_MIS)

    def test_saturation_trace(self):
        res = select_tokens(np.array([0.5, 0.9, 0.4, 0.3]), complete(4), 2, 0.5)
        assert res.kept == (0, 1)
        assert res.pivots == (1,)
        assert res.provenance == (TAG_FALLBACK, TAG_PIVOT)
        assert res.excluded_count == 3

    def test_edgeless_degenerates_to_top_n(self):
        res = select_tokens(np.array([0.1, 0.4, 0.3, 0.2, 0.5]),
                            edgeless(5), 3, 0.5)
        assert res.kept == (1, 2, 4)
        assert res.excluded_count == 0

    def test_full_budget_keeps_everything(self):
        res = select_tokens(np.array([0.3, 0.1, 0.2]), chain(3), 3, 0.7)
        assert res.kept == (0, 1, 2)


class TestValidation:
    def test_budget_out_of_range(self):
        with pytest.raises(ValueError):
            select_tokens(np.array([0.1, 0.2]), edgeless(2), 3, 0.5)
        with pytest.raises(ValueError):
            select_tokens(np.array([0.1, 0.2]), edgeless(2), 0, 0.5)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            select_tokens(np.array([0.1, 0.2, 0.3]), edgeless(2), 1, 0.5)

    def test_result_invariants_enforced(self):
        with pytest.raises(ValueError):
            SelectionResult(n_tokens=4, kept=(2, 0), pivots=(),
                            provenance=(TAG_MIS, TAG_MIS), excluded_count=0)
        with pytest.raises(ValueError):
            SelectionResult(n_tokens=4, kept=(0, 2), pivots=(1,),
                            provenance=(TAG_MIS, TAG_MIS), excluded_count=0)


def mis_violations(res, adj):
    """Edges from mis-tagged tokens to any token selected before them.

    Exclusion is symmetric, so a mis token may touch neither a pivot nor
    another mis token, whatever the internal selection order was.
    """
    mis = [t for t, tag in zip(res.kept, res.provenance) if tag == TAG_MIS]
    violations = 0
    for t in mis:
        for u in list(res.pivots) + mis:
            if u != t and adj.matrix[t, u]:
                violations += 1
    return violations


class TestProperties:
    def test_budget_exactness_and_mis_property(self):
        rng = new_rng(101)
        for _ in range(300):
            n_tokens = int(rng.integers(1, 65))
            scores = rng.random(n_tokens)
            adj = random_graph(rng, n_tokens, float(rng.uniform(0, 0.4)))
            n = int(rng.integers(1, n_tokens + 1))
            r_pivot = float(rng.choice([0.0, 0.5, 0.7, 1.0]))
            res = select_tokens(scores, adj, n, r_pivot)
            assert res.n == n
            assert len(res.pivots) == pivot_count(n, r_pivot)
            assert mis_violations(res, adj) == 0

    def test_pivots_are_exact_top_k(self):
        rng = new_rng(103)
        for _ in range(200):
            n_tokens = int(rng.integers(2, 50))
            scores = rng.integers(0, 8, size=n_tokens) / 8.0  # forces ties
            adj = random_graph(rng, n_tokens, 0.3)
            n = int(rng.integers(1, n_tokens + 1))
            res = select_tokens(scores, adj, n, 0.7)
            n_p = pivot_count(n, 0.7)
            expect = np.lexsort((np.arange(n_tokens), -scores))[:n_p]
            assert res.pivots == tuple(sorted(int(i) for i in expect))

    def test_rpivot_one_equals_plain_top_n(self):
        rng = new_rng(107)
        for _ in range(100):
            n_tokens = int(rng.integers(1, 40))
            scores = rng.random(n_tokens)
            adj = random_graph(rng, n_tokens, 0.5)
            n = int(rng.integers(1, n_tokens + 1))
            res = select_tokens(scores, adj, n, 1.0)
            expect = np.lexsort((np.arange(n_tokens), -scores))[:n]
            assert res.kept == tuple(sorted(int(i) for i in expect))
            assert all(tag == TAG_PIVOT for tag in res.provenance)

    def test_deterministic_across_repeats(self):
        rng = new_rng(109)
        scores = rng.random(30)
        adj = random_graph(rng, 30, 0.3)
        results = {select_tokens(scores, adj, 12, 0.7) for _ in range(10)}
        assert len(results) == 1

    def test_deterministic_under_concurrent_batch_use(self):
        from concurrent.futures import ThreadPoolExecutor
        rng = new_rng(111)
        scores = rng.random(64)
        adj = random_graph(rng, 64, 0.2)
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(
                lambda _: select_tokens(scores, adj, 20, 0.7), range(32)))
        assert len(set(results)) == 1

    def test_tie_break_prefers_lower_index(self):
        scores = np.array([0.5, 0.5, 0.5, 0.5])
        res = select_tokens(scores, edgeless(4), 2, 1.0)
        assert res.kept == (0, 1)

    def test_excluded_count_monotone_in_graph_density(self):
        rng = new_rng(113)
        from conftest import tokens as make_tokens
        for _ in range(40):
            h, w = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            ts = make_tokens(h, w, rng.normal(size=(h * w, 6)))
            scores = rng.random(h * w)
            n = int(rng.integers(1, h * w + 1))
            r_pivot = float(rng.choice([0.0, 0.5, 0.7, 1.0]))
            prev = None
            for theta in (0.9, 0.7, 0.5, 0.3):
                cfg = PruneConfig(alpha=0.5, theta_sim=theta, keep_ratio=1.0)
                adj = build_graph(ts, cfg)
                res = select_tokens(scores, adj, n, r_pivot)
                if prev is not None:
                    assert res.excluded_count >= prev
                prev = res.excluded_count

    def test_mask_matches_kept(self):
        res = select_tokens(np.array([0.9, 0.8, 0.7, 0.6]), chain(4), 2, 0.5)
        np.testing.assert_array_equal(res.mask(),
                                      [True, False, True, False])
