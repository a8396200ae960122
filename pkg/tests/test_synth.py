import numpy as np
import pytest

from vtprune.graph import semantic_similarity
from vtprune.synth import SceneSpec, bias_profile_grid, generate_scene


def spec(**kwargs):
    base = dict(seed=0, h=12, w=12, dim=8, object_count=2, object_radius=1,
                noise_sigma=0.0, bias_profile="uniform", bias_strength=1.0)
    base.update(kwargs)
    return SceneSpec(**base)


class TestBiasProfiles:
    def test_uniform(self):
        g = bias_profile_grid("uniform", 3, 4, 5.0)
        np.testing.assert_array_equal(g.values, np.ones(12))

    def test_bottom_heavy_ramp(self):
        g = bias_profile_grid("bottom_heavy", 3, 2, 4.0).as_matrix()
        np.testing.assert_allclose(g[:, 0], [1.0, 2.5, 4.0])
        np.testing.assert_array_equal(g[:, 0], g[:, 1])

    def test_periphery_heavy_center_and_corner(self):
        g = bias_profile_grid("periphery_heavy", 5, 5, 3.0).as_matrix()
        assert g[2, 2] == 1.0
        assert g[0, 0] == 3.0
        assert g[4, 4] == 3.0

    def test_single_row_bottom_heavy_is_uniform(self):
        g = bias_profile_grid("bottom_heavy", 1, 4, 4.0)
        np.testing.assert_array_equal(g.values, np.ones(4))


class TestGenerateScene:
    def test_bit_exact_reproducibility(self):
        s = spec(noise_sigma=0.3, bias_profile="bottom_heavy",
                 bias_strength=4.0)
        a = generate_scene(s)
        b = generate_scene(s)
        np.testing.assert_array_equal(a.tokens.features, b.tokens.features)
        np.testing.assert_array_equal(a.attention.values, b.attention.values)
        assert a.salient_cells == b.salient_cells

    def test_different_seeds_differ(self):
        a = generate_scene(spec(seed=1))
        b = generate_scene(spec(seed=2))
        assert not np.array_equal(a.tokens.features, b.tokens.features)

    def test_salient_count_is_sum_of_object_areas(self):
        for k, rad in [(1, 2), (2, 1), (3, 1)]:
            sc = generate_scene(spec(object_count=k, object_radius=rad))
            assert len(sc.salient_cells) == k * (2 * rad + 1) ** 2

    def test_noiseless_objects_have_cosine_one(self):
        sc = generate_scene(spec(object_count=1, object_radius=2,
                                 noise_sigma=0.0, seed=4))
        sim = semantic_similarity(sc.tokens)
        cells = list(sc.salient_cells)
        sub = sim[np.ix_(cells, cells)]
        np.testing.assert_allclose(sub, 1.0, rtol=0, atol=1e-12)

    def test_uniform_bias_makes_attention_proportional_to_saliency(self):
        sc = generate_scene(spec(bias_strength=1.0, saliency_gain=4.0))
        vals = sc.attention.values
        sal = np.zeros(sc.tokens.n, dtype=bool)
        sal[list(sc.salient_cells)] = True
        np.testing.assert_array_equal(vals[sal], 5.0)
        np.testing.assert_array_equal(vals[~sal], 1.0)
        assert set(np.flatnonzero(vals == vals.max())) == set(sc.salient_cells)

    def test_attention_is_saliency_times_bias(self):
        sc = generate_scene(spec(bias_profile="bottom_heavy",
                                 bias_strength=4.0, saliency_gain=2.0))
        sal = np.ones(sc.tokens.n)
        sal[list(sc.salient_cells)] = 3.0
        np.testing.assert_allclose(sc.attention.values,
                                   sal * sc.true_bias.values)

    def test_center_rows_respected(self):
        sc = generate_scene(spec(h=24, w=24, object_count=3, object_radius=2,
                                 center_rows=(2, 3)))
        rows = {c // 24 for c in sc.salient_cells}
        assert max(rows) <= 5 and min(rows) >= 0

    def test_objects_must_fit(self):
        with pytest.raises(ValueError):
            generate_scene(spec(h=3, w=3, object_radius=2))

    def test_overcrowding_rejected(self):
        with pytest.raises(ValueError):
            generate_scene(spec(h=8, w=8, object_count=2, object_radius=2))
