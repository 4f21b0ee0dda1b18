import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabclust.datasets import gaussian_blobs
from tabclust.errors import InsufficientSubclusters
from tabclust.init import (
    BirchConfig,
    CFTree,
    birch_init,
    build_tree,
    cf_radius,
    kmeans_init,
    tune_threshold,
)
from tabclust.numerics import make_rng


def check_tree(tree, shadow=None):
    """Structural invariants; ``shadow`` maps entry id -> list of points."""
    for node in tree.nodes():
        if node.is_leaf:
            assert node.size <= tree.leaf_capacity
            for i in range(node.size):
                assert cf_radius(node.n[i], node.ls[i], node.ss[i]) <= tree.threshold + 1e-9
                if shadow is not None:
                    pts = shadow[node.ids[i]]
                    ls = pts[0].copy()
                    ss = float(pts[0] @ pts[0])
                    for p in pts[1:]:
                        ls = ls + p
                        ss = ss + float(p @ p)
                    assert node.n[i] == len(pts)
                    assert np.array_equal(node.ls[i], ls)
                    assert node.ss[i] == ss
        else:
            assert node.size <= tree.branching
            assert len(node.children) == node.size
            for i, child in enumerate(node.children):
                n, ls, ss = child.total()
                assert node.n[i] == n
                assert np.array_equal(node.ls[i], ls)
                assert node.ss[i] == ss


def test_first_insertion():
    tree = CFTree(3, threshold=1.0)
    p = np.array([1.0, -2.0, 0.5])
    tree.insert(p)
    (e,) = tree.leaf_entries()
    assert e.n == 1 and np.array_equal(e.ls, p) and e.ss == p @ p


def test_same_point_twice():
    tree = CFTree(2, threshold=0.1)
    p = np.array([3.0, 4.0])
    tree.insert(p)
    tree.insert(p)
    (e,) = tree.leaf_entries()
    assert e.n == 2 and np.array_equal(e.ls, 2 * p)
    assert e.radius == pytest.approx(0.0, abs=1e-12)


def test_far_point_opens_entry():
    tree = CFTree(2, threshold=0.5)
    tree.insert(np.zeros(2))
    before = len(tree)
    tree.insert(np.array([100.0, 0.0]))
    assert len(tree) == before + 1


def test_split_keeps_invariants_small_capacity():
    rng = make_rng(0)
    tree = CFTree(2, threshold=0.05, branching=3, leaf_capacity=2)
    shadow = {}
    for z in rng.standard_normal((300, 2)):
        eid = tree.insert(z)
        shadow.setdefault(eid, []).append(z)
        check_tree(tree, shadow)
    assert not tree.root.is_leaf


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 2.0), st.integers(2, 6), st.integers(1, 6))
def test_tree_invariants_property(seed, T, B, L):
    rng = make_rng(seed)
    tree = CFTree(3, threshold=T, branching=B, leaf_capacity=L)
    shadow = {}
    for z in rng.standard_normal((120, 3)):
        shadow.setdefault(tree.insert(z), []).append(z)
    check_tree(tree, shadow)
    assert sum(e.n for e in tree.leaf_entries()) == 120


def test_birch_two_blobs():
    rng = make_rng(3)
    sep = 20.0
    a = rng.standard_normal((100, 5))
    b = rng.standard_normal((100, 5)) + np.r_[sep, np.zeros(4)]
    Z = np.vstack([a, b])
    c = birch_init(Z, 2, BirchConfig(), rng=0)
    truth = np.stack([a.mean(0), b.mean(0)])
    order = np.argsort(c.centers[:, 0])
    assert np.max(np.linalg.norm(c.centers[order] - truth, axis=1)) < 0.05 * sep
    for k in range(2):
        np.testing.assert_allclose(c.centers[k], Z[c.labels == k].mean(0), atol=1e-12)


def test_birch_each_point_own_center():
    Z = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 5.0], [7.0, 7.0]])
    c = birch_init(Z, 4, BirchConfig(threshold=0.5), rng=0)
    got = sorted(map(tuple, c.centers))
    assert got == sorted(map(tuple, Z))
    assert len(set(c.labels.tolist())) == 4


def test_birch_identical_points_single_center():
    Z = np.tile([1.0, 2.0, 3.0], (10, 1))
    c = birch_init(Z, 1, BirchConfig(threshold=0.1), rng=0)
    np.testing.assert_array_equal(c.centers, [[1.0, 2.0, 3.0]])
    assert np.all(c.labels == 0)


def test_tune_threshold_keeps_start_when_enough(caplog):
    X, _ = gaussian_blobs(n=300, d=10, k=3, separation=30.0, rng=0)
    T0 = 0.5 * np.mean([np.linalg.norm(X[i] - X[j]) for i in range(300) for j in range(i + 1, 300)])
    n0 = len(build_tree(X, BirchConfig(), T0))
    assert n0 >= 3  # run-and-inspect: the start threshold already suffices
    with caplog.at_level(logging.INFO, logger="tabclust.init.birch"):
        T = tune_threshold(X, 3)
    assert T == pytest.approx(T0, rel=1e-12)
    assert any("leaf entries" in r.getMessage() for r in caplog.records)


def test_tune_threshold_halves_and_logs(caplog):
    X, _ = gaussian_blobs(n=200, d=8, k=4, separation=6.0, rng=2)
    with caplog.at_level(logging.INFO, logger="tabclust.init.birch"):
        T = tune_threshold(X, 40)
    msgs = [r.getMessage() for r in caplog.records]
    assert len(msgs) >= 2
    counts = [int(m.split("-> ")[1].split()[0]) for m in msgs]
    assert counts[-1] >= 40 and all(c < 40 for c in counts[:-1])
    assert len(build_tree(X, BirchConfig(), T)) >= 40


def test_tune_threshold_identical_points():
    with pytest.raises(InsufficientSubclusters):
        tune_threshold(np.ones((20, 3)), 2)


def test_tune_threshold_stability_rule():
    X, _ = gaussian_blobs(n=200, d=8, k=4, separation=6.0, rng=2)
    T = tune_threshold(X, 4, stability_tol=0.1)
    c, c_half = len(build_tree(X, BirchConfig(), T)), len(build_tree(X, BirchConfig(), T / 2))
    assert c >= 4 and abs(c_half - c) < 0.1 * c


def test_kmeans_single_cluster_is_mean():
    Z = make_rng(0).standard_normal((50, 4))
    c = kmeans_init(Z, 1, restarts=3, rng=0)
    np.testing.assert_allclose(c.centers[0], Z.mean(0), atol=1e-12)


@pytest.mark.parametrize("seeding", ["plusplus", "uniform"])
def test_kmeans_two_blobs(seeding):
    rng = make_rng(1)
    a = rng.standard_normal((80, 3))
    b = rng.standard_normal((80, 3)) + 15.0
    Z = np.vstack([a, b])
    c = kmeans_init(Z, 2, restarts=20, seeding=seeding, rng=0)
    truth = np.stack([a.mean(0), b.mean(0)])
    order = np.argsort(c.centers[:, 0])
    np.testing.assert_allclose(c.centers[order], truth, atol=1e-9)
    sse_total = np.sum((Z - Z.mean(0)) ** 2)
    assert c.inertia < 0.05 * sse_total


def test_kmeans_deterministic():
    Z = make_rng(0).standard_normal((100, 3))
    a = kmeans_init(Z, 5, restarts=4, rng=9)
    b = kmeans_init(Z, 5, restarts=4, rng=9)
    assert a.centers.tobytes() == b.centers.tobytes()
    assert np.array_equal(a.labels, b.labels)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 8))
def test_initializers_return_k_centers(seed, K):
    Z = make_rng(seed).standard_normal((40, 3))
    Z[:5] = Z[0]  # some duplicates
    for c in (kmeans_init(Z, K, restarts=2, rng=seed), birch_init(Z, K, rng=seed)):
        assert c.centers.shape == (K, 3)
        assert c.labels.shape == (40,)
        assert set(np.unique(c.labels)) <= set(range(K))
        for k in np.unique(c.labels):
            np.testing.assert_allclose(c.centers[k], Z[c.labels == k].mean(0), atol=1e-12)
