import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sight.exceptions import ArgumentError, SplitError
from sight.graph import graph_from_edges
from sight.synthetic import ShiftSpec, apply_shift, generate_synthetic, split_nodes


class TestGenerateSynthetic:
    def test_disjoint_cliques(self):
        g = generate_synthetic(10, 2, 1.0, 0.0, 3, seed=0)
        a = g.adjacency.toarray()
        expected = np.zeros((10, 10))
        expected[:5, :5] = 1
        expected[5:, 5:] = 1
        np.fill_diagonal(expected, 0)
        np.testing.assert_array_equal(a, expected)

    def test_same_seed_identical(self):
        a = generate_synthetic(60, 3, 0.2, 0.02, 4, seed=11)
        b = generate_synthetic(60, 3, 0.2, 0.02, 4, seed=11)
        assert a.equals(b)
        assert a.features.tobytes() == b.features.tobytes()

    def test_intra_density_binomial(self):
        n, p = 200, 0.1
        g = generate_synthetic(n, 2, p, 0.01, 4, seed=5)
        a = g.adjacency.toarray()
        half = n // 2
        pairs = 2 * half * (half - 1) // 2
        intra = np.triu(a[:half, :half], 1).sum() + np.triu(a[half:, half:], 1).sum()
        sd = np.sqrt(pairs * p * (1 - p))
        assert abs(intra - pairs * p) <= 3 * sd

    def test_too_many_classes(self):
        with pytest.raises(ArgumentError):
            generate_synthetic(3, 4, 0.5, 0.1, 2, seed=0)

    def test_probability_order(self):
        with pytest.raises(ArgumentError):
            generate_synthetic(10, 2, 0.1, 0.2, 2, seed=0)


class TestSplitNodes:
    def test_all_train(self):
        g = generate_synthetic(20, 2, 0.3, 0.0, 2, seed=0)
        m = split_nodes(g, (1, 0, 0, 0), seed=0)
        assert m.train.all()

    def test_exact_counts(self):
        g = generate_synthetic(100, 2, 0.3, 0.0, 2, seed=0)
        m = split_nodes(g, (0.5, 0.25, 0.25, 0), seed=1)
        assert [int(x.sum()) for x in m.as_tuple()] == [50, 25, 25, 0]

    def test_deterministic(self):
        g = generate_synthetic(50, 3, 0.3, 0.0, 2, seed=0)
        a = split_nodes(g, (0.4, 0.2, 0.2, 0.2), seed=9)
        b = split_nodes(g, (0.4, 0.2, 0.2, 0.2), seed=9)
        assert a.equals(b)

    def test_stratified(self):
        g = generate_synthetic(100, 2, 0.3, 0.0, 2, seed=0)
        m = split_nodes(g, (0.4, 0.2, 0.2, 0.2), seed=2)
        for mask in m.as_tuple():
            counts = np.bincount(g.labels[mask], minlength=2)
            assert abs(counts[0] - counts[1]) <= 1

    def test_class_without_train_nodes(self):
        g = graph_from_edges([], np.zeros((4, 1)), [0, 0, 0, 1], 2)
        with pytest.raises(SplitError):
            split_nodes(g, (0.25, 0.75, 0, 0), seed=0)

    def test_fraction_sum(self):
        g = generate_synthetic(10, 2, 0.3, 0.0, 2, seed=0)
        with pytest.raises(ArgumentError):
            split_nodes(g, (0.6, 0.6, 0, 0), seed=0)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(20, 80), seed=st.integers(0, 1000), train=st.floats(0.3, 0.4),
       rest=st.lists(st.floats(0.0, 0.2), min_size=3, max_size=3))
def test_split_masks_disjoint_and_sized(n, seed, train, rest):
    fr = [train] + rest
    g = generate_synthetic(n, 2, 0.3, 0.0, 2, seed=seed)
    m = split_nodes(g, fr, seed)
    total = sum(x.sum() for x in m.as_tuple())
    assert total <= n
    assert np.all(sum(x.astype(int) for x in m.as_tuple()) <= 1)
    for f, mask in zip(fr, m.as_tuple()):
        assert abs(mask.sum() - f * n) < 1 + 1e-9


class TestApplyShift:
    @pytest.fixture
    def base(self):
        g = generate_synthetic(200, 2, 0.2, 0.01, 4, seed=0)
        return g, split_nodes(g, (0.4, 0.2, 0.2, 0.2), seed=0)

    def test_covariate_gap(self, base):
        g, m = base
        shifted = apply_shift(g, m, ShiftSpec("covariate", 8, 5.0, seed=1))
        spur = shifted.features[:, 4:]
        diff = spur[m.test_ood].mean() - spur[m.train].mean()
        # per-node spurious means have unit noise variance plus class-mean spread
        se = np.sqrt(spur[m.test_ood].mean(axis=1).var(ddof=1) / m.test_ood.sum()
                     + spur[m.train].mean(axis=1).var(ddof=1) / m.train.sum())
        assert abs(diff - 5.0) <= 3 * se
        np.testing.assert_array_equal(shifted.labels, g.labels)
        np.testing.assert_array_equal(shifted.features[:, :4], g.features)

    def test_covariate_zero_gap_same_distribution(self, base):
        g, m = base
        a = apply_shift(g, m, ShiftSpec("covariate", 8, 0.0, seed=1))
        b = apply_shift(g, m, ShiftSpec("covariate", 8, 3.0, seed=1))
        delta = b.features - a.features
        np.testing.assert_array_equal(delta[~m.test_ood], 0.0)
        np.testing.assert_allclose(delta[m.test_ood][:, 4:], 3.0, atol=1e-12)

    def test_concept_full_relabel(self, base):
        g, m = base
        shifted = apply_shift(g, m, ShiftSpec("concept", relabel_fraction=1.0, seed=1))
        np.testing.assert_array_equal(shifted.labels[m.test_ood], (g.labels[m.test_ood] + 1) % 2)
        np.testing.assert_array_equal(shifted.labels[~m.test_ood], g.labels[~m.test_ood])
        np.testing.assert_array_equal(shifted.features, g.features)

    def test_concept_noop_warns(self, base):
        g, m = base
        shifted = apply_shift(g, m, ShiftSpec("concept", relabel_fraction=0.0))
        assert "shift_warning" in shifted.metadata
        np.testing.assert_array_equal(shifted.labels, g.labels)

    def test_input_untouched(self, base):
        g, m = base
        before = g.features.copy()
        apply_shift(g, m, ShiftSpec("covariate", 8, 5.0))
        np.testing.assert_array_equal(g.features, before)
