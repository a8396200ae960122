import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid, tokens
from vtprune import PruneConfig, grid_neighbors, resolve_budget


class TestTokenSet:
    def test_shape_and_derived_fields(self):
        ts = tokens(2, 3, np.ones((6, 4)))
        assert ts.n == 6 and ts.dim == 4

    def test_row_count_must_match_grid(self):
        with pytest.raises(ValueError):
            tokens(2, 3, np.ones((5, 4)))

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_nonfinite_features_rejected(self, bad):
        f = np.ones((4, 2))
        f[1, 1] = bad
        with pytest.raises(ValueError):
            tokens(2, 2, f)

    def test_features_are_immutable(self):
        ts = tokens(1, 2, [[1.0], [2.0]])
        with pytest.raises(ValueError):
            ts.features[0, 0] = 5.0


class TestAttentionGrid:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            grid(1, 2, [0.5, -0.1])

    def test_relative_values_may_exceed_one(self):
        g = grid(1, 2, [3.5, 0.0])
        assert g.values.max() > 1.0

    def test_as_matrix_roundtrip(self):
        g = grid(2, 3, [0, 1, 2, 3, 4, 5])
        assert g.as_matrix().shape == (2, 3)
        np.testing.assert_array_equal(g.as_matrix().reshape(-1), g.values)


class TestPruneConfig:
    def test_defaults_match_contract(self):
        cfg = PruneConfig(keep_ratio=0.333)
        assert cfg.epsilon == 1e-7
        assert cfg.alpha == 1.0
        assert cfg.theta_sim == 0.8
        assert cfg.pivot_ratio == 0.7

    def test_budget_exclusivity(self):
        with pytest.raises(ValueError):
            PruneConfig(keep_count=5, keep_ratio=0.5)
        with pytest.raises(ValueError):
            PruneConfig()

    @pytest.mark.parametrize("kwargs", [
        {"epsilon": 0.0, "keep_count": 1},
        {"alpha": 1.5, "keep_count": 1},
        {"theta_sim": -0.1, "keep_count": 1},
        {"pivot_ratio": 2.0, "keep_count": 1},
        {"keep_ratio": 0.0},
        {"keep_ratio": 1.5},
        {"keep_count": 0},
    ])
    def test_range_validation(self, kwargs):
        with pytest.raises(ValueError):
            PruneConfig(**kwargs)


class TestResolveBudget:
    def test_exact_multiplication(self):
        assert resolve_budget(PruneConfig(keep_ratio=0.5), 576) == 288

    def test_identity_ratio(self):
        assert resolve_budget(PruneConfig(keep_ratio=1.0), 7) == 7

    def test_repeating_ratio_one_ninth(self):
        # 2880 tokens at ratio 1/9 must keep exactly 320.
        assert resolve_budget(PruneConfig(keep_ratio=1 / 9), 2880) == 320

    def test_small_ratio_clamps_to_one(self):
        assert resolve_budget(PruneConfig(keep_ratio=0.001), 10) == 1

    def test_absolute_passthrough_and_errors(self):
        assert resolve_budget(PruneConfig(keep_count=4), 10) == 4
        with pytest.raises(ValueError):
            resolve_budget(PruneConfig(keep_count=11), 10)

    @given(st.integers(min_value=1, max_value=5000))
    @settings(max_examples=200)
    def test_monotone_in_ratio(self, n):
        ratios = np.linspace(0.01, 1.0, 25)
        budgets = [resolve_budget(PruneConfig(keep_ratio=float(r)), n)
                   for r in ratios]
        assert budgets == sorted(budgets)
        assert all(1 <= b <= n for b in budgets)


class TestGridNeighbors:
    def test_center_of_3x3(self):
        assert grid_neighbors(4, 3, 3) == {0, 1, 2, 3, 5, 6, 7, 8}

    def test_corner_of_3x3(self):
        assert grid_neighbors(0, 3, 3) == {1, 3, 4}

    def test_single_row_degenerates(self):
        assert grid_neighbors(1, 1, 3) == {0, 2}

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            grid_neighbors(9, 3, 3)
        with pytest.raises(IndexError):
            grid_neighbors(-1, 3, 3)

    def test_symmetry_exhaustive_up_to_16x16(self):
        for h in range(1, 17):
            for w in range(1, 17):
                neigh = [grid_neighbors(i, h, w) for i in range(h * w)]
                for i, ns in enumerate(neigh):
                    for j in ns:
                        assert i in neigh[j]

    def test_neighbor_counts(self):
        for h in range(3, 8):
            for w in range(3, 8):
                counts = {len(grid_neighbors(i, h, w)) for i in range(h * w)}
                assert counts <= {3, 5, 8}
        for w in range(2, 8):
            counts = {len(grid_neighbors(i, 1, w)) for i in range(w)}
            assert counts <= {1, 2}
