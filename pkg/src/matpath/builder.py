"""Probabilistic multi-matching graph construction from a shape collection.

Pipeline per shape pair ``(x, y)``::

    per-vertex features -> k-means clusters (once per shape)
    -> per-cluster percentile matrices (p x f)
    -> Frobenius distances d_ij between clusters of x and clusters of y
    -> Gaussian kernel exp(-d^2 / sigma^2)
    -> Sinkhorn scaling to a doubly-stochastic n x n matrix M_xy

and ``M_yx = M_xy.T``.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy.spatial.distance import cdist

from .core import MatrixGraph, check_edge_matrix
from .errors import ConvergenceError, DimensionMismatchError, InfeasibleError, InputError, MatPathError

__all__ = [
    "ShapeRecord",
    "ClusterModel",
    "PercentileMatrix",
    "BuilderConfig",
    "PRESETS",
    "percentile_levels",
    "kmeans_cluster",
    "percentile_stats",
    "cluster_distance",
    "cluster_distance_matrix",
    "gaussian_similarity",
    "sinkhorn_normalize",
    "builtin_descriptor",
    "shape_descriptors",
    "build_graph",
]


@dataclass
class ShapeRecord:
    """One shape: vertices ``(V, 3)``, optional triangles ``(F, 3)`` and features ``(V, f)``."""

    id: str
    vertices: np.ndarray
    faces: np.ndarray | None = None
    features: np.ndarray | None = None

    def __post_init__(self):
        self.id = str(self.id)
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise InputError(f"shape {self.id!r}: vertices must be (V, 3), got {self.vertices.shape}")
        if self.faces is not None:
            self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim == 1:
                feats = feats[:, None]
            if feats.shape[0] != len(self.vertices):
                raise InputError(
                    f"shape {self.id!r}: {feats.shape[0]} feature rows for {len(self.vertices)} vertices"
                )
            if not np.all(np.isfinite(feats)):
                raise InputError(f"shape {self.id!r}: features contain NaN or Inf")
            self.features = feats


@dataclass
class ClusterModel:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float

    @property
    def n(self):
        return len(self.centroids)

    def members(self, i):
        return np.flatnonzero(self.assignments == i)


@dataclass
class PercentileMatrix:
    values: np.ndarray
    levels: np.ndarray


_CAMEL = {
    "sinkhorn_tol": "sinkhornTol",
    "sinkhorn_max_iter": "sinkhornMaxIter",
    "kmeans_seed": "kmeansSeed",
    "kmeans_restarts": "kmeansRestarts",
    "descriptor_bins": "descriptorBins",
    "use_builtin_descriptor": "useBuiltinDescriptor",
}
_SNAKE = {v: k for k, v in _CAMEL.items()}


@dataclass(frozen=True)
class BuilderConfig:
    n: int = 28
    p: int = 300
    sigma: float = 2.0
    sinkhorn_tol: float = 1e-8
    sinkhorn_max_iter: int = 10000
    kmeans_seed: int = 0
    kmeans_restarts: int = 10
    #: histogram bins of the built-in descriptor (its feature dimension f)
    descriptor_bins: int = 32
    use_builtin_descriptor: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"cluster count n must be >= 1, got {self.n}")
        if self.p < 1:
            raise InputError(f"percentile count p must be >= 1, got {self.p}")
        if not self.sigma > 0:
            raise InputError(f"sigma must be positive, got {self.sigma}")
        if self.kmeans_restarts < 1:
            raise InputError("kmeans_restarts must be >= 1")
        if self.descriptor_bins < 1:
            raise InputError("descriptor_bins must be >= 1")

    def to_dict(self):
        return {_CAMEL.get(k, k): v for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc, **overrides):
        known = {f.name for f in fields(cls)}
        kw = {}
        for key, value in doc.items():
            name = _SNAKE.get(key, key)
            if name not in known:
                raise InputError(f"unknown builder config key {key!r}")
            kw[name] = value
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    @classmethod
    def preset(cls, name, **overrides):
        try:
            base = PRESETS[name]
        except KeyError:
            raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        return replace(base, **{k: v for k, v in overrides.items() if v is not None})


# (p, sigma) per dataset, n = 28 throughout
PRESETS = {
    "non-rigid-world": BuilderConfig(n=28, p=300, sigma=2.0),
    "tosca-michael": BuilderConfig(n=28, p=3000, sigma=4.5),
    "tosca-victoria": BuilderConfig(n=28, p=150, sigma=0.7),
    "tosca-cat": BuilderConfig(n=28, p=150, sigma=1.0),
    "smal": BuilderConfig(n=28, p=300, sigma=3.0),
    "shapenet-chairs": BuilderConfig(n=28, p=1000, sigma=2.0),
}


def percentile_levels(p):
    """``p`` equally spaced levels ``(i + 0.5) / p * 100``, in percent."""
    return (np.arange(p) + 0.5) / p * 100.0


def kmeans_cluster(features, n, seed=0, restarts=10):
    """Lloyd k-means with k-means++ seeding, best of ``restarts`` runs.

    Empty clusters are repaired by moving the point farthest from its
    centroid in the currently largest cluster.
    """
    from sklearn.cluster import KMeans

    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) < n:
        raise InfeasibleError(f"cannot form {n} clusters from {len(X)} points")
    with warnings.catch_warnings():
        # duplicate points: sklearn warns when fewer distinct points than clusters
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=n, init="k-means++", n_init=restarts, random_state=seed, algorithm="lloyd")
        labels = km.fit_predict(X)
    labels = _repair_empty(X, labels.astype(np.int64), n)
    centroids = np.stack([X[labels == i].mean(axis=0) for i in range(n)])
    inertia = float(((X - centroids[labels]) ** 2).sum())
    return ClusterModel(labels, centroids, inertia)


def _repair_empty(X, labels, n):
    while True:
        counts = np.bincount(labels, minlength=n)
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0:
            return labels
        big = int(np.argmax(counts))
        idx = np.flatnonzero(labels == big)
        centroid = X[idx].mean(axis=0)
        far = idx[np.argmax(((X[idx] - centroid) ** 2).sum(axis=1))]
        labels = labels.copy()
        labels[far] = empty[0]


def percentile_stats(features, cluster, levels):
    """Per-column percentiles of the rows in ``cluster``.

    Uses linear interpolation between order statistics: for sorted values
    ``x_0 <= ... <= x_{m-1}`` and level ``q`` the position is
    ``h = q / 100 * (m - 1)`` and the value ``x_floor(h) + (h - floor(h)) * (x_ceil(h) - x_floor(h))``.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    idx = np.asarray(cluster)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        raise InputError("percentile statistics of an empty cluster")
    levels = np.asarray(levels, dtype=np.float64)
    values = np.percentile(X[idx], levels, axis=0, method="linear")
    return PercentileMatrix(values.reshape(len(levels), X.shape[1]), levels)


def _check_compatible(a, b):
    if a.values.shape != b.values.shape:
        raise DimensionMismatchError(
            f"percentile matrices differ in shape: {a.values.shape} vs {b.values.shape}"
        )
    if not np.array_equal(a.levels, b.levels):
        raise DimensionMismatchError("percentile matrices use different levels")


def cluster_distance(a, b):
    """Frobenius norm of the difference of two percentile matrices."""
    _check_compatible(a, b)
    return float(np.linalg.norm(a.values - b.values))


def cluster_distance_matrix(pa, pb):
    """All pairwise :func:`cluster_distance` values between two lists of percentile matrices."""
    for a in pa[1:]:
        _check_compatible(pa[0], a)
    for b in pb:
        _check_compatible(pa[0], b)
    A = np.stack([m.values.ravel() for m in pa])
    B = np.stack([m.values.ravel() for m in pb])
    return cdist(A, B)


def gaussian_similarity(d, sigma):
    """``exp(-d**2 / sigma**2)``; no factor 2 in the denominator."""
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}")
    return np.exp(-np.square(d) / sigma**2)


def sinkhorn_normalize(m, tol=1e-8, max_iter=10000, *, history=None):
    """Scale a strictly positive square matrix to a doubly-stochastic one.

    Alternates full row and column normalization, rows first, until the
    largest row/column-sum deviation from 1 is at most ``tol``. If
    ``history`` is a list, the residual after every sweep is appended to it.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"Sinkhorn scaling needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)) or a.min() <= 0:
        raise InputError("Sinkhorn scaling needs strictly positive finite entries")

    def residual(x):
        return max(np.abs(x.sum(axis=1) - 1).max(), np.abs(x.sum(axis=0) - 1).max())

    res = residual(a)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"Sinkhorn did not converge in {max_iter} iterations (residual {res:.3g})", residual=res
            )
        a /= a.sum(axis=1, keepdims=True)
        a /= a.sum(axis=0, keepdims=True)
        res = residual(a)
        it += 1
        if history is not None:
            history.append(res)
    return check_edge_matrix(a, tol=max(tol, 1e-12))


def builtin_descriptor(vertices, bins=32):
    """Rotation- and scale-invariant per-vertex descriptor.

    For every vertex: the normalized histogram of its distances to all other
    vertices, after centring at the centroid and scaling by the bounding-sphere
    radius. Distances then lie in ``[0, 2]``, split into ``bins`` equal bins.
    """
    P = np.asarray(vertices, dtype=np.float64)
    if P.ndim != 2 or len(P) < 2:
        raise InputError("the built-in descriptor needs at least two vertices")
    P = P - P.mean(axis=0)
    radius = np.sqrt((P**2).sum(axis=1)).max()
    if radius == 0:
        raise InputError("all vertices coincide")
    P = P / radius
    V = len(P)
    hist = np.zeros((V, bins))
    step = max(1, 2_000_000 // V)
    for a in range(0, V, step):
        d = cdist(P[a:a + step], P)
        b = np.minimum((d * (bins / 2.0)).astype(np.int64), bins - 1)
        flat = b + (np.arange(len(d)) * bins)[:, None]
        hist[a:a + step] = np.bincount(flat.ravel(), minlength=len(d) * bins).reshape(len(d), bins)
    # drop the zero self-distance
    hist[:, 0] -= 1.0
    return hist / (V - 1)


def shape_descriptors(shape, config):
    """Per-cluster percentile matrices for one shape."""
    feats = shape.features
    if feats is None:
        if not config.use_builtin_descriptor:
            raise InputError(f"shape {shape.id!r} has no features and the built-in descriptor is disabled")
        feats = builtin_descriptor(shape.vertices, config.descriptor_bins)
    clusters = kmeans_cluster(feats, config.n, seed=config.kmeans_seed, restarts=config.kmeans_restarts)
    levels = percentile_levels(config.p)
    return [percentile_stats(feats, clusters.members(i), levels) for i in range(config.n)], clusters


def _edge(px, py, config):
    d = cluster_distance_matrix(px, py)
    return sinkhorn_normalize(gaussian_similarity(d, config.sigma), config.sinkhorn_tol, config.sinkhorn_max_iter)


def _annotated(exc, where):
    new = type(exc)(f"{where}: {exc}")
    if isinstance(exc, ConvergenceError):
        new.residual = exc.residual
    return new


def build_graph(shapes, config=None, *, threads=1, return_details=False):
    """Build the complete multi-matching graph over ``shapes``.

    Each shape is clustered once; edges are built for every unordered pair
    and mirrored as transposes. Work may run on ``threads`` worker threads
    without affecting the result.
    """
    config = config or BuilderConfig()
    shapes = list(shapes)
    if len(shapes) < 2:
        raise InputError("need at least two shapes to build a graph")
    ids = [s.id for s in shapes]
    if len(set(ids)) != len(ids):
        raise InputError("shape ids must be unique")
    dims = {s.features.shape[1] for s in shapes if s.features is not None}
    if any(s.features is None for s in shapes) and config.use_builtin_descriptor:
        dims.add(config.descriptor_bins)
    if len(dims) > 1:
        raise DimensionMismatchError(f"shapes have differing feature dimensions {sorted(dims)}")

    def describe(shape):
        try:
            return shape_descriptors(shape, config)
        except MatPathError as exc:
            raise _annotated(exc, f"shape {shape.id!r}") from exc

    pairs = [(i, j) for i in range(len(shapes)) for j in range(i + 1, len(shapes))]

    def edge(ij):
        i, j = ij
        try:
            return _edge(desc[i][0], desc[j][0], config)
        except MatPathError as exc:
            raise _annotated(exc, f"pair ({ids[i]!r}, {ids[j]!r})") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            desc = list(pool.map(describe, shapes))
            mats = list(pool.map(edge, pairs))
    else:
        desc = [describe(s) for s in shapes]
        mats = [edge(ij) for ij in pairs]

    edges = {(ids[i], ids[j]): m for (i, j), m in zip(pairs, mats)}
    graph = MatrixGraph(ids, edges, symmetric=True, tol=max(config.sinkhorn_tol, 1e-12))
    if return_details:
        return graph, {"descriptors": {ids[i]: d for i, d in enumerate(desc)}}
    return graph


def distance_summary(shapes, config, quantiles=(0, 5, 25, 50, 75, 95, 100)):
    """Quantiles of all cross-shape cluster distances, to help pick ``sigma``."""
    desc = [shape_descriptors(s, config)[0] for s in shapes]
    ds = [
        cluster_distance_matrix(desc[i], desc[j]).ravel()
        for i in range(len(desc))
        for j in range(i + 1, len(desc))
    ]
    ds = np.concatenate(ds) if ds else np.zeros(1)
    return dict(zip(quantiles, np.percentile(ds, quantiles)))
