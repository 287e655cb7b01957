import itertools
import json

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from matpath import builder
from matpath.builder import (
    BuilderConfig,
    ShapeRecord,
    build_graph,
    builtin_descriptor,
    cluster_distance,
    gaussian_similarity,
    kmeans_cluster,
    percentile_levels,
    percentile_stats,
    sinkhorn_normalize,
)
from matpath.core import is_doubly_stochastic
from matpath.errors import ConvergenceError, DimensionMismatchError, InfeasibleError, InputError
from matpath.synthetic import FAMILY_BUILDER, family_shape, shape_families


def test_kmeans_separated_1d():
    X = np.array([[0.0], [0.1], [10.0], [10.1]])
    cm = kmeans_cluster(X, 2, seed=0)
    groups = sorted(tuple(cm.members(i)) for i in range(2))
    assert groups == [(0, 1), (2, 3)]


def test_kmeans_identical_points():
    X = np.tile([1.0, 2.0, 3.0], (6, 1))
    cm = kmeans_cluster(X, 1)
    assert np.array_equal(cm.assignments, np.zeros(6))
    assert np.allclose(cm.centroids[0], [1, 2, 3])


def test_kmeans_blobs_recovered():
    rng = np.random.default_rng(0)
    centers = rng.normal(scale=10.0, size=(4, 5))
    truth = np.repeat(np.arange(4), 100)
    X = centers[truth] + rng.normal(size=(400, 5))
    cm = kmeans_cluster(X, 4, seed=3)
    best = max(
        np.mean(np.array(perm)[cm.assignments] == truth) for perm in itertools.permutations(range(4))
    )
    assert best >= 0.99


def test_kmeans_repairs_empty_clusters():
    # more clusters than distinct points: every cluster must still be non-empty
    X = np.array([[0.0], [0.0], [0.0], [1.0], [1.0]])
    cm = kmeans_cluster(X, 4, seed=0)
    assert all(len(cm.members(i)) > 0 for i in range(4))


def test_kmeans_rejects_too_few_points():
    with pytest.raises(InfeasibleError):
        kmeans_cluster(np.zeros((2, 3)), 3)


def test_percentile_examples():
    col = np.array([[1.0], [2.0], [3.0], [4.0], [5.0]])
    pm = percentile_stats(col, np.arange(5), np.array([0.0, 50.0, 100.0]))
    assert np.array_equal(pm.values[:, 0], [1, 3, 5])
    pm = percentile_stats(col[:4], np.arange(4), np.array([25.0]))
    assert pm.values[0, 0] == pytest.approx(1.75, abs=1e-15)
    const = np.tile([0.5, -2.0], (7, 1))
    pm = percentile_stats(const, np.arange(7), percentile_levels(5))
    assert np.all(pm.values == const[0])


def order_statistic(values, q):
    """Linear interpolation between closest ranks, written out by hand."""
    x = sorted(values)
    h = (len(x) - 1) * q / 100.0
    lo = int(np.floor(h))
    hi = min(lo + 1, len(x) - 1)
    return x[lo] + (h - lo) * (x[hi] - x[lo])


def test_percentiles_match_order_statistics():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    members = rng.choice(40, 17, replace=False)
    levels = percentile_levels(9)
    pm = percentile_stats(X, members, levels)
    for j, q in enumerate(levels):
        for f in range(3):
            assert pm.values[j, f] == pytest.approx(order_statistic(X[members, f], q), abs=1e-12)
    assert np.all(np.diff(pm.values, axis=0) >= 0)


def test_percentile_levels():
    assert np.allclose(percentile_levels(4), [12.5, 37.5, 62.5, 87.5])
    assert np.allclose(percentile_levels(1), [50.0])


def test_cluster_distance():
    P = builder.PercentileMatrix(np.zeros((2, 2)), np.array([25.0, 75.0]))
    Q = builder.PercentileMatrix(np.array([[0.0, 0.0], [3.0, 0.0]]), P.levels)
    R = builder.PercentileMatrix(np.array([[1.0, 2.0], [2.0, 0.0]]), P.levels)
    assert cluster_distance(P, P) == 0.0
    assert cluster_distance(P, Q) == 3.0
    assert cluster_distance(P, R) == 3.0
    with pytest.raises(DimensionMismatchError):
        cluster_distance(P, builder.PercentileMatrix(np.zeros((3, 2)), np.zeros(3)))


def test_gaussian_similarity():
    assert gaussian_similarity(0.0, 2.0) == 1.0
    assert gaussian_similarity(2.0, 2.0) == pytest.approx(np.exp(-1), abs=1e-15)
    assert gaussian_similarity(4.0, 2.0) == pytest.approx(np.exp(-4), abs=1e-15)
    d = np.linspace(0, 5, 50)
    assert np.all(np.diff(gaussian_similarity(d, 1.3)) < 0)
    with pytest.raises(InputError):
        gaussian_similarity(1.0, 0.0)


def test_sinkhorn_two_by_two():
    out = sinkhorn_normalize(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(out, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-9, rtol=0)


def test_sinkhorn_fixed_point_and_rank_one():
    u = np.full((5, 5), 0.2)
    assert np.allclose(sinkhorn_normalize(u), u, atol=1e-12)
    rng = np.random.default_rng(0)
    r, c = rng.uniform(0.1, 3, 6), rng.uniform(0.1, 3, 6)
    assert np.allclose(sinkhorn_normalize(np.outer(r, c)), 1 / 6, atol=1e-9)


def test_sinkhorn_residual_decreases_per_sweep():
    rng = np.random.default_rng(1)
    hist = []
    out = sinkhorn_normalize(np.exp(2 * rng.normal(size=(8, 8))), history=hist)
    assert len(hist) > 2
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert is_doubly_stochastic(out, 1e-8)


def test_sinkhorn_errors():
    with pytest.raises(ConvergenceError) as err:
        sinkhorn_normalize(np.exp(8 * np.random.default_rng(0).normal(size=(6, 6))), max_iter=3)
    assert err.value.residual > 0 and err.value.exit_code == 4
    with pytest.raises(InputError):
        sinkhorn_normalize(np.array([[1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(DimensionMismatchError):
        sinkhorn_normalize(np.ones((2, 3)))


def blob(rng, V=120):
    return rng.normal(size=(V, 3)) * [3.0, 1.0, 0.5]


def test_builtin_descriptor_invariances():
    rng = np.random.default_rng(4)
    P = blob(rng)
    base = builtin_descriptor(P, 16)
    assert base.shape == (120, 16)
    assert np.allclose(base.sum(axis=1), 1.0)
    R = Rotation.random(random_state=1).as_matrix()
    assert np.allclose(builtin_descriptor(P @ R.T + [4, -2, 1], 16), base, atol=1e-9)
    assert np.allclose(builtin_descriptor(P * 3.7, 16), base, atol=1e-9)


def test_builtin_descriptor_order_independent():
    cube = np.array(list(itertools.product([0.0, 1.0], repeat=3)))
    perm = np.random.default_rng(0).permutation(8)
    a = builtin_descriptor(cube, 8)
    b = builtin_descriptor(cube[perm], 8)
    assert np.array_equal(a[np.lexsort(a.T)], b[np.lexsort(b.T)])
    assert np.array_equal(a[perm], b)


def test_shape_record_validation():
    with pytest.raises(InputError):
        ShapeRecord("x", np.zeros((4, 2)))
    with pytest.raises(InputError):
        ShapeRecord("x", np.zeros((4, 3)), features=np.zeros((3, 2)))
    with pytest.raises(InputError):
        ShapeRecord("x", np.zeros((2, 3)), features=np.array([[np.nan], [0.0]]))


@pytest.fixture(scope="module")
def family_graph():
    shapes, labels = shape_families(seed=0, per_family=2)
    return shapes, build_graph(shapes, BuilderConfig(**FAMILY_BUILDER))


def test_build_graph_invariants(family_graph):
    shapes, g = family_graph
    assert g.nodes == tuple(s.id for s in shapes)
    assert g.n == 28
    for (u, v), m in g.edges().items():
        assert np.all(m >= 0)
        assert np.abs(m.sum(axis=0) - 1).max() <= 1e-8
        assert np.abs(m.sum(axis=1) - 1).max() <= 1e-8
        assert np.array_equal(g.edge(v, u), m.T)


def test_build_graph_deterministic_across_threads(family_graph):
    shapes, g = family_graph
    again = build_graph(shapes, BuilderConfig(**FAMILY_BUILDER), threads=3)
    assert again.to_json() == g.to_json()


def test_identical_shapes_kernel_diagonal():
    rng = np.random.default_rng(0)
    a = family_shape(rng, "pear", "a")
    b = ShapeRecord("b", a.vertices.copy(), a.faces)
    cfg = BuilderConfig(n=8, p=20, sigma=0.5)
    _, details = build_graph([a, b], cfg, return_details=True)
    pa, pb = details["descriptors"]["a"][0], details["descriptors"]["b"][0]
    k = gaussian_similarity(builder.cluster_distance_matrix(pa, pb), cfg.sigma)
    assert np.all(np.diag(k) == 1.0)


def test_build_graph_errors():
    rng = np.random.default_rng(0)
    a = family_shape(rng, "disk", "a")
    with pytest.raises(InputError):
        build_graph([a])
    with pytest.raises(InputError):
        build_graph([a, a])
    b = ShapeRecord("b", a.vertices, a.faces, features=np.ones((len(a.vertices), 5)))
    with pytest.raises(DimensionMismatchError):
        build_graph([a, b], BuilderConfig(n=4, p=5))
    with pytest.raises(InputError, match="'a'"):
        build_graph([a, b], BuilderConfig(n=4, p=5, use_builtin_descriptor=False))


def test_precomputed_features_are_used():
    rng = np.random.default_rng(1)
    V = 60
    shapes = [
        ShapeRecord(f"s{i}", rng.normal(size=(V, 3)), features=rng.normal(size=(V, 4)))
        for i in range(3)
    ]
    g = build_graph(shapes, BuilderConfig(n=5, p=7, sigma=3.0, use_builtin_descriptor=False))
    assert g.n == 5


def test_config_presets_round_trip():
    expected = {
        "non-rigid-world": (300, 2.0),
        "tosca-michael": (3000, 4.5),
        "tosca-victoria": (150, 0.7),
        "tosca-cat": (150, 1.0),
        "smal": (300, 3.0),
        "shapenet-chairs": (1000, 2.0),
    }
    assert set(builder.PRESETS) == set(expected)
    for name, (p, sigma) in expected.items():
        cfg = BuilderConfig.preset(name)
        assert (cfg.n, cfg.p, cfg.sigma) == (28, p, sigma)
        again = BuilderConfig.from_dict(json.loads(cfg.to_json()))
        assert again == cfg
    assert BuilderConfig.preset("smal", sigma=1.5).sigma == 1.5
    with pytest.raises(InputError):
        BuilderConfig.preset("nope")
    with pytest.raises(InputError):
        BuilderConfig.from_dict({"bogus": 1})
    with pytest.raises(InputError):
        BuilderConfig(sigma=0)
