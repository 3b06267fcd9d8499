"""Similarity graph construction against dense brute-force oracles."""

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    brute_force_instance_graph,
    brute_force_label_graph,
    pairwise_sq,
)
from mvtsk.graphs import (
    build_graphs,
    build_instance_similarity,
    build_label_similarity,
    graph_to_coo_array,
    pairwise_sq_dists,
)


class TestPairwiseDistances:
    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(12, 5))
        np.testing.assert_allclose(pairwise_sq_dists(x), pairwise_sq(x, x), atol=1e-10)

    def test_two_argument_form(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(7, 3))
        y = rng.normal(size=(4, 3))
        got = pairwise_sq_dists(x, y)
        assert got.shape == (7, 4)
        np.testing.assert_allclose(got, pairwise_sq(x, y), atol=1e-10)

    def test_nonnegative_zero_diagonal(self):
        rng = np.random.default_rng(2)
        x = rng.normal(scale=1e-8, size=(20, 2)) + 1e6
        d2 = pairwise_sq_dists(x)
        assert np.all(d2 >= 0)
        np.testing.assert_allclose(np.diag(d2), 0.0, atol=1e-3)


class TestInstanceSimilarity:
    def test_identical_observed_neighbors_weight_one(self):
        points = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
        valid = np.array([True, True, True])
        s = build_instance_similarity(points, valid, 1).toarray()
        assert s[0, 1] == pytest.approx(1.0)
        assert s[1, 0] == pytest.approx(1.0)
        # the far point links to row 0 at kernel value exp(-1/2): its
        # distance equals the bandwidth (the only positive kNN distance)
        assert s[0, 2] == pytest.approx(np.exp(-0.5))

    def test_both_endpoints_missing_no_edge(self):
        # rows 0 and 1 are mutually nearest but both unobserved
        points = np.array([[0.0], [0.1], [10.0], [10.2], [20.0]])
        valid = np.array([False, False, True, True, True])
        s = build_instance_similarity(points, valid, 1).toarray()
        assert s[0, 1] == 0.0 and s[1, 0] == 0.0
        assert s[2, 3] > 0.0

    def test_missing_observed_pairs_kept(self):
        points = np.array([[0.0], [0.1], [5.0], [5.1]])
        valid = np.array([False, True, True, True])
        s = build_instance_similarity(points, valid, 1).toarray()
        assert s[0, 1] > 0.0

    def test_matches_brute_force_small(self):
        for seed in range(6):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(5, 31))
            k = int(rng.integers(1, min(6, n)))
            points = rng.normal(size=(n, 3))
            valid = rng.random(n) > 0.3
            got = build_instance_similarity(points, valid, k).toarray()
            want = brute_force_instance_graph(points, valid, k)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(25, 4))
        valid = rng.random(25) > 0.2
        s = build_instance_similarity(points, valid, 5)
        dense = s.toarray()
        np.testing.assert_array_equal(dense, dense.T)
        np.testing.assert_allclose(np.diag(dense), 0.0)
        vals = dense[dense > 0]
        assert np.all(vals <= 1.0 + 1e-12)

    def test_k_validation(self):
        points = np.zeros((5, 2))
        valid = np.ones(5, dtype=bool)
        with pytest.raises(ValueError, match="k must satisfy"):
            build_instance_similarity(points, valid, 0)
        with pytest.raises(ValueError, match="k must satisfy"):
            build_instance_similarity(points, valid, 5)
        with pytest.raises(ValueError, match="valid"):
            build_instance_similarity(points, np.ones(4, dtype=bool), 2)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        points = rng.normal(size=(15, 3))
        valid = np.ones(15, dtype=bool)
        a = build_instance_similarity(points, valid, 4)
        b = build_instance_similarity(points, valid, 4)
        np.testing.assert_array_equal(a.toarray(), b.toarray())

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_brute_force_random(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 30))
        k = int(rng.integers(1, n))
        points = rng.normal(size=(n, int(rng.integers(1, 5))))
        valid = rng.random(n) > 0.4
        got = build_instance_similarity(points, valid, k).toarray()
        want = brute_force_instance_graph(points, valid, k)
        np.testing.assert_allclose(got, want, atol=1e-12)


class TestLabelSimilarity:
    def test_same_class_true_pairs_exactly_one(self):
        rng = np.random.default_rng(5)
        y = rng.random((8, 3))
        y /= y.sum(axis=1, keepdims=True)
        true_mask = np.array([1, 1, 1, 0, 0, 1, 0, 0], dtype=bool)
        labels = np.array([0, 0, 1, -1, -1, 0, -1, -1])
        z = build_label_similarity(y, true_mask, labels, 2).toarray()
        for a in (0, 1, 5):
            for b in (0, 1, 5):
                if a != b:
                    assert z[a, b] == 1.0
        # different true classes never use the kernel branch
        assert z[0, 2] == 0.0 and z[2, 5] == 0.0

    def test_matches_brute_force_small(self):
        for seed in range(6):
            rng = np.random.default_rng(seed + 100)
            n = int(rng.integers(6, 31))
            k = int(rng.integers(1, min(5, n)))
            c = int(rng.integers(2, 4))
            y = rng.random((n, c))
            y /= y.sum(axis=1, keepdims=True)
            true_mask = rng.random(n) > 0.5
            labels = np.where(true_mask, rng.integers(0, c, size=n), -1)
            got = build_label_similarity(y, true_mask, labels, k).toarray()
            want = brute_force_label_graph(y, true_mask, labels, k)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(6)
        y = rng.random((20, 4))
        true_mask = rng.random(20) > 0.6
        labels = np.where(true_mask, rng.integers(0, 4, size=20), -1)
        z = build_label_similarity(y, true_mask, labels, 3)
        dense = z.toarray()
        np.testing.assert_array_equal(dense, dense.T)
        np.testing.assert_allclose(np.diag(dense), 0.0)
        assert np.all(dense <= 1.0 + 1e-12)

    def test_k_validation(self):
        y = np.zeros((4, 2))
        with pytest.raises(ValueError, match="k must satisfy"):
            build_label_similarity(y, np.zeros(4, dtype=bool), np.full(4, -1), 4)


class TestBuildGraphs:
    def make_state(self, n=18, nv=2, seed=7):
        rng = np.random.default_rng(seed)
        views = [rng.normal(size=(n, 3)) for _ in range(nv)]
        mask = rng.random((n, nv)) > 0.25
        mask[~mask.any(axis=1), 0] = True
        y = rng.random((n, 3))
        y /= y.sum(axis=1, keepdims=True)
        labeled = rng.random(n) > 0.5
        labels = np.where(labeled, rng.integers(0, 3, size=n), -1)
        unlabeled_idx = np.flatnonzero(~labeled).astype(np.int64)
        return views, mask, y, labeled, labels, unlabeled_idx

    def test_structure_and_subset_graphs(self):
        views, mask, y, labeled, labels, unl = self.make_state()
        g = build_graphs(views, mask, y, labeled, labels, unl, 4)
        assert len(g.s_all) == 2 and len(g.s_unl) == 2
        assert g.k == 4
        n, nu = mask.shape[0], unl.size
        for v in range(2):
            assert g.s_all[v].shape == (n, n)
            assert g.s_unl[v].shape == (nu, nu)
            expect = build_instance_similarity(
                views[v][unl], mask[unl, v], min(4, nu - 1)
            )
            np.testing.assert_allclose(
                g.s_unl[v].toarray(), expect.toarray(), atol=1e-15
            )
        assert g.z.shape == (n, n)

    def test_k_clamped_to_available_rows(self):
        views, mask, y, labeled, labels, unl = self.make_state(n=6)
        g = build_graphs(views, mask, y, labeled, labels, unl, 50)
        assert g.s_all[0].shape == (6, 6)
        # with k >= N-1 every observed-endpoint pair is connected
        dense = g.s_all[0].toarray()
        obs = mask[:, 0]
        for i in range(6):
            for j in range(6):
                if i != j and (obs[i] or obs[j]):
                    assert dense[i, j] > 0

    def test_tiny_unlabeled_set_gives_empty_graph(self):
        views, mask, y, labeled, labels, _ = self.make_state(n=10)
        unl = np.array([3], dtype=np.int64)
        g = build_graphs(views, mask, y, labeled, labels, unl, 4)
        assert g.s_unl[0].shape == (1, 1)
        assert g.s_unl[0].nnz == 0


class TestCooExport:
    def test_row_major_order_and_roundtrip(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(12, 2))
        s = build_instance_similarity(points, np.ones(12, dtype=bool), 3)
        arr = graph_to_coo_array(s)
        assert arr.shape[1] == 3
        keys = arr[:, 0] * 12 + arr[:, 1]
        assert np.all(np.diff(keys) > 0)
        rebuilt = sp.coo_matrix(
            (arr[:, 2], (arr[:, 0].astype(int), arr[:, 1].astype(int))), shape=(12, 12)
        ).toarray()
        np.testing.assert_allclose(rebuilt, s.toarray())

    def test_empty_graph(self):
        arr = graph_to_coo_array(sp.csr_matrix((3, 3)))
        assert arr.shape == (0, 3)
