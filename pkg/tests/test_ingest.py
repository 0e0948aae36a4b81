import itertools

import numpy as np
import pytest

from cheapbandits.ingest import (
    PointSet,
    cluster,
    cluster_rewards,
    ingest,
    knn_graph,
    normalize_features,
    read_points_csv,
    synthetic_blobs,
    write_points_csv,
)


def two_blobs(rng, n_each):
    a = rng.normal(0.1, 0.02, (n_each, 2))
    b = rng.normal(0.9, 0.02, (n_each, 2))
    return np.vstack([a, b]), np.repeat([0, 1], n_each)


def best_two_partition(X):
    """Exhaustive minimum-inertia split of X into two nonempty groups."""
    best = (np.inf, None)
    M = len(X)
    for mask in itertools.product([0, 1], repeat=M - 1):
        lab = np.array((0,) + mask)
        if lab.all() or not lab.any():
            continue
        inertia = sum(((X[lab == g] - X[lab == g].mean(0)) ** 2).sum() for g in (0, 1))
        if inertia < best[0]:
            best = (inertia, lab)
    return best


class TestCluster:
    def test_k_equals_m(self):
        X = np.random.default_rng(0).random((15, 3))
        cl = cluster(X, 15, seed=1)
        assert cl.inertia == 0.0
        assert sorted(cl.assignment.tolist()) == list(range(15))

    def test_two_blobs_match_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            X, truth = two_blobs(rng, int(rng.integers(3, 7)))
            cl = cluster(X, 2, seed=trial)
            oracle_inertia, oracle_lab = best_two_partition(X)
            same = (cl.assignment == cl.assignment[0]) == (oracle_lab == oracle_lab[0])
            assert same.all()
            assert ((cl.assignment == cl.assignment[0]) == (truth == truth[0])).all()
            assert cl.inertia == pytest.approx(oracle_inertia, rel=1e-9)

    def test_inertia_non_increasing(self):
        ps = synthetic_blobs(600, 12, 4, ["a", "b", "c"], seed=5, spread=0.1)
        for seed in range(5):
            h = cluster(normalize_features(ps.points), 25, seed=seed).inertia_history
            assert all(b <= a * (1 + 1e-12) for a, b in zip(h, h[1:]))
            assert len(h) <= 100

    def test_every_cluster_nonempty(self):
        # heavy duplication makes empty clusters likely without re-seeding
        X = np.vstack([np.zeros((30, 2)), np.ones((30, 2)), np.random.default_rng(0).random((5, 2))])
        for seed in range(10):
            cl = cluster(X, 6, seed=seed)
            assert np.bincount(cl.assignment, minlength=6).min() >= 1

    def test_deterministic(self):
        X = np.random.default_rng(1).random((80, 3))
        a, b = cluster(X, 7, seed=4), cluster(X, 7, seed=4)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        np.testing.assert_array_equal(a.centers, b.centers)

    def test_rejects_too_many_clusters(self):
        with pytest.raises(ValueError):
            cluster(np.zeros((3, 2)), 4)


class TestClusterRewards:
    def test_fraction(self):
        r = cluster_rewards(np.array([0, 0, 0, 1]), ["x", "y", "x", "y"], "x")
        np.testing.assert_allclose(r, [2 / 3, 0.0])

    def test_none_match(self):
        np.testing.assert_array_equal(cluster_rewards(np.array([0, 1, 1]), ["a", "a", "a"], "b"), 0.0)

    def test_all_match(self):
        np.testing.assert_array_equal(cluster_rewards(np.array([0, 1, 2, 2]), ["a"] * 4, "a"), 1.0)

    def test_numeric_labels_match_strings(self):
        np.testing.assert_array_equal(cluster_rewards(np.array([0, 0]), ["2", "3"], 2), [0.5])


class TestKnnGraph:
    def test_collinear(self):
        g = knn_graph(np.array([[0.0], [1.0], [3.0]]), 1)
        assert g.edges == ((0, 1, 1.0), (1, 2, 1.0))

    def test_complete(self):
        g = knn_graph(np.random.default_rng(0).random((7, 2)), 6)
        assert len(g.edges) == 21

    def test_min_degree_and_unit_weights(self):
        C = np.random.default_rng(2).random((60, 3))
        for k in (1, 3, 10):
            g = knn_graph(C, k)
            assert g.min_degree >= k
            assert {w for _, _, w in g.edges} == {1.0}

    def test_distance_tie_goes_to_lower_index(self):
        # node 0 is equidistant from 1 and 2; both of those have a closer partner
        g = knn_graph(np.array([[0.0], [2.0], [-2.0], [3.0], [-3.0]]), 1)
        assert g.edges == ((0, 1, 1.0), (1, 3, 1.0), (2, 4, 1.0))

    def test_rejects_k(self):
        with pytest.raises(ValueError):
            knn_graph(np.zeros((3, 1)), 3)


def test_points_csv_round_trip(tmp_path):
    ps = synthetic_blobs(50, 3, 4, ["1", "2"], seed=0)
    write_points_csv(ps, tmp_path / "p.csv")
    back = read_points_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.points, ps.points)
    assert back.labels.tolist() == ps.labels.tolist()


def test_points_csv_bad_header(tmp_path):
    (tmp_path / "p.csv").write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_points_csv(tmp_path / "p.csv")


def test_pointset_shape_checks():
    with pytest.raises(ValueError):
        PointSet(np.zeros((3, 2)), np.array(["a", "b"]))


def test_normalize_features():
    X = np.array([[1.0, 5.0, 2.0], [3.0, 5.0, 4.0]])
    np.testing.assert_array_equal(normalize_features(X), [[0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])


def smoothness_certificate(f, L, rng, n_perm=100):
    q = float(f @ L @ f)
    perm = np.median([float(g @ L @ g) for g in (rng.permutation(f) for _ in range(n_perm))])
    return q, perm


def test_smoothness_certificate_on_blobs():
    # about 20 clusters per blob, so most kNN links stay inside a blob
    ps = synthetic_blobs(3000, 10, 5, ["1", "2", "3"], seed=11)
    res = ingest(ps, 200, 10, "1", seed=0)
    q, perm = smoothness_certificate(res.rewards, res.graph.laplacian, np.random.default_rng(0))
    assert q <= 0.5 * perm
    assert res.graph.min_degree >= 10
    assert np.all((res.rewards >= 0) & (res.rewards <= 1))
