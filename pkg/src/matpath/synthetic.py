"""Seeded synthetic inputs: random edge matrices and graphs, toy shape families."""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from .builder import ShapeRecord, sinkhorn_normalize
from .core import MatrixGraph
from .errors import ConvergenceError

FAMILIES = ("pear", "cigar", "disk")
# builder settings under which the toy families separate cleanly
FAMILY_BUILDER = dict(n=28, p=50, sigma=0.5)


def random_doubly_stochastic(rng, n, peak=None):
    """Sinkhorn-scaled ``exp(peak * G)`` with standard normal ``G``.

    ``peak`` controls concentration (larger: closer to a permutation);
    drawn uniformly from [0, 4] when omitted. Draws on which the scaling
    converges too slowly are discarded and redrawn.
    """
    if peak is None:
        peak = rng.uniform(0.0, 4.0)
    while True:
        try:
            return sinkhorn_normalize(np.exp(peak * rng.standard_normal((n, n))), tol=1e-12, max_iter=20000)
        except ConvergenceError:
            continue


def random_permutation(rng, n):
    return np.eye(n)[rng.permutation(n)]


def node_names(count):
    width = len(str(count - 1))
    return [f"v{i:0{width}d}" for i in range(count)]


def random_graph(rng, num_nodes, n, peak_range=(0.0, 4.0)):
    """Complete symmetric graph with independently drawn doubly-stochastic edges."""
    names = node_names(num_nodes)
    edges = {}
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            edges[names[i], names[j]] = random_doubly_stochastic(rng, n, rng.uniform(*peak_range))
    return MatrixGraph(names, edges)


def random_scalar_graph(rng, num_nodes, low=0.0, high=10.0):
    """Symmetric 1x1-edge graph with weights drawn from ``(low, high]``."""
    names = node_names(num_nodes)
    edges = {}
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            w = high - rng.uniform(0.0, high - low)
            edges[names[i], names[j]] = np.array([[w]])
    return MatrixGraph(names, edges)


def scalar_graph(nodes, weights):
    """Symmetric scalar graph from ``{(u, v): w}``."""
    return MatrixGraph(nodes, {uv: np.array([[float(w)]]) for uv, w in weights.items()})


def pruning_example():
    """Four-node scalar instance where the candidate sets shrink to one node each.

    Direct costs ``s->a = 4`` and ``s->t = 3.5``; ``(s, b, a)`` costs 2.8 and
    ``(s, b, t)`` costs 3. The optimum is ``(s, b, a, t)`` at 2.9.
    """
    w = {
        ("s", "a"): 4.0,
        ("s", "b"): 1.0,
        ("s", "t"): 3.5,
        ("a", "b"): 1.8,
        ("a", "t"): 0.1,
        ("b", "t"): 2.0,
    }
    return scalar_graph(["s", "a", "b", "t"], w)


def uv_sphere(lat=12, lon=16):
    """Unit sphere vertices and triangles (poles included)."""
    theta = np.linspace(0, np.pi, lat + 1)[1:-1]
    phi = np.linspace(0, 2 * np.pi, lon, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    verts = np.vstack([[0, 0, 1], ring, [0, 0, -1]])
    faces = []
    north, south = 0, len(verts) - 1

    def vid(r, c):
        return 1 + r * lon + (c % lon)

    for c in range(lon):
        faces.append((north, vid(0, c), vid(0, c + 1)))
        faces.append((south, vid(lat - 2, c + 1), vid(lat - 2, c)))
    for r in range(lat - 2):
        for c in range(lon):
            a, b, d, e = vid(r, c), vid(r, c + 1), vid(r + 1, c), vid(r + 1, c + 1)
            faces.append((a, d, b))
            faces.append((b, d, e))
    return verts, np.array(faces, dtype=np.int64)


def _family_surface(family, v):
    if family == "pear":
        # egg swelling towards +z: clusters at the two ends look different
        z = v[:, 2]
        r = 1 + 0.55 * z
        return np.column_stack([v[:, 0] * r, v[:, 1] * r, 1.6 * z])
    if family == "cigar":
        return v * np.array([3.0, 0.8, 0.8])
    if family == "disk":
        return v * np.array([2.2, 2.2, 0.4])
    raise ValueError(f"unknown family {family!r}")


def family_shape(rng, family, shape_id, *, jitter=0.05, rotate=True):
    """Randomly perturbed member of a toy shape family.

    Vertex counts vary between members; each member is randomly stretched,
    bumped, rotated and scaled.
    """
    lat = int(rng.integers(12, 16))
    lon = int(rng.integers(16, 20))
    verts, faces = uv_sphere(lat, lon)
    verts = _family_surface(family, verts) * (1 + jitter * rng.uniform(-1, 1, 3))
    freq = rng.uniform(1, 3, 3)
    verts = verts * (1 + 0.5 * jitter * np.sin(verts @ freq + rng.uniform(0, 2 * np.pi)))[:, None]
    if rotate:
        verts = verts @ Rotation.random(random_state=rng).as_matrix().T
    verts = verts * rng.uniform(0.5, 2.0)
    return ShapeRecord(shape_id, verts, faces)


def shape_families(seed=0, per_family=5, families=FAMILIES):
    """``per_family`` members of each family plus the label map."""
    rng = np.random.default_rng(seed)
    shapes, labels = [], {}
    for fam in families:
        for i in range(per_family):
            sid = f"{fam}_{i:02d}"
            shapes.append(family_shape(rng, fam, sid))
            labels[sid] = fam
    return shapes, labels


def bend_sequence(angles, *, lat=12, lon=16, length=3.0):
    """A capsule bent progressively about the y axis, one shape per angle (degrees).

    All members share vertex count and faces, so they can be morphed.
    """
    base, faces = uv_sphere(lat, lon)
    base = base * np.array([0.5, 0.5, length / 2])
    shapes = []
    for a in angles:
        ang = np.deg2rad(a)
        v = base.copy()
        if abs(ang) > 1e-12:
            # wrap the z axis onto an arc of radius r spanning the bend angle
            r = length / ang
            phi = v[:, 2] / r
            x = v[:, 0]
            v = np.stack([r - (r - x) * np.cos(phi), v[:, 1], (r - x) * np.sin(phi)], axis=1)
        shapes.append(ShapeRecord(f"bend_{int(round(a)):03d}", v, faces))
    return shapes
