"""Shape metric, retrieval evaluation, intermediate shapes and morphing."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .core import TOTAL_ENTROPY
from .errors import InputError, UsageError
from .meshio import write_obj
from .solver import SolverConfig, all_pairs, fixed_k_path, shortest_paths_from

__all__ = [
    "DistanceTable",
    "RetrievalEval",
    "MorphSequence",
    "shape_distance_table",
    "nearest_neighbors",
    "evaluate_retrieval",
    "intermediate_shapes",
    "placements_from_costs",
    "default_placements",
    "morph",
]


@dataclass
class DistanceTable:
    nodes: list
    dist: np.ndarray
    paths: dict = field(default_factory=dict)
    #: solver output the table was built from, if any
    result: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = list(self.nodes)
        self.dist = np.asarray(self.dist, dtype=np.float64)
        self._index = {v: i for i, v in enumerate(self.nodes)}

    def __call__(self, x, y):
        return float(self.dist[self._index[x], self._index[y]])

    def index(self, node):
        try:
            return self._index[node]
        except KeyError:
            raise InputError(f"unknown node {node!r}") from None

    def to_dict(self):
        return {
            "nodes": self.nodes,
            "dist": self.dist.tolist(),
            "paths": [
                {"source": s, "target": t, "path": list(p), "cost": float(self(s, t))}
                for (s, t), p in sorted(self.paths.items())
            ],
        }

    def save(self, path):
        FsPath(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def from_dict(cls, doc):
        try:
            paths = {(e["source"], e["target"]): tuple(e["path"]) for e in doc.get("paths", [])}
            table = cls(doc["nodes"], doc["dist"], paths)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed distance table: {exc}") from None
        V = len(table.nodes)
        if table.dist.shape != (V, V):
            raise InputError(f"distance matrix is {table.dist.shape}, expected {(V, V)}")
        return table

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(FsPath(path).read_text()))


def shape_distance_table(graph, config=None, *, threads=1):
    """Shortest-path cost between every pair of nodes."""
    config = config or SolverConfig()
    ap = all_pairs(graph, config, threads=threads)
    names = list(graph.nodes)
    V = len(names)
    dist = np.zeros((V, V))
    paths = {}
    for i, x in enumerate(names):
        for j, y in enumerate(names):
            p = ap[x, y]
            dist[i, j] = p.cost
            paths[x, y] = p.nodes
    return DistanceTable(names, dist, paths, result=ap)


def nearest_neighbors(table, query, k):
    """The ``k`` nodes closest to ``query`` (itself excluded), ties broken by node id."""
    i = table.index(query)
    if not 1 <= k <= len(table.nodes) - 1:
        raise UsageError(f"k must lie in [1, {len(table.nodes) - 1}], got {k}")
    others = [v for v in table.nodes if v != query]
    others.sort(key=lambda v: (table.dist[i, table.index(v)], v))
    return others[:k]


@dataclass
class RetrievalEval:
    labels: dict
    queries: list
    ks: np.ndarray
    #: g[i, k-1]; NaN where undefined (query without family members)
    g: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def summary_rows(self):
        return [(int(k), float(m), float(s)) for k, m, s in zip(self.ks, self.mean, self.std)]

    def write_csv(self, summary_path, long_path=None):
        with open(summary_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "mean_g", "std_g"])
            for k, m, s in self.summary_rows():
                w.writerow([k, repr(m), repr(s)])
        if long_path is not None:
            with open(long_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["query", "k", "g"])
                for qi, q in enumerate(self.queries):
                    for kk, k in enumerate(self.ks):
                        val = self.g[qi, kk]
                        w.writerow([q, int(k), "" if np.isnan(val) else repr(float(val))])


def evaluate_retrieval(table, labels):
    """Proportion of correct nearest neighbours ``g = TP(i, k) / min(m_i, k)``.

    ``m_i`` counts the other members of the query's family (the query itself
    excluded). Queries whose family has no other member get NaN and are left
    out of the per-k mean and standard deviation.
    """
    missing = [v for v in table.nodes if v not in labels]
    if missing:
        raise InputError(f"no label for node(s) {missing}")
    nodes = table.nodes
    V = len(nodes)
    ks = np.arange(1, V)
    g = np.full((V, len(ks)), np.nan)
    for qi, q in enumerate(nodes):
        m = sum(1 for v in nodes if v != q and labels[v] == labels[q])
        if m == 0:
            continue
        hits = np.cumsum([labels[v] == labels[q] for v in nearest_neighbors(table, q, V - 1)])
        g[qi] = hits / np.minimum(m, ks)
    defined = ~np.isnan(g).all(axis=1)
    if defined.any():
        mean = g[defined].mean(axis=0)
        std = g[defined].std(axis=0)
    else:
        mean = std = np.full(len(ks), np.nan)
    return RetrievalEval(dict(labels), list(nodes), ks, g, mean, std)


def intermediate_shapes(graph, source, target, mode="unrestricted", config=None):
    """Interior nodes of the shortest path between ``source`` and ``target``.

    ``mode`` is ``"unrestricted"`` or an integer ``k`` (exactly ``k`` edges,
    hence ``k - 1`` intermediates).
    """
    config = config or SolverConfig()
    if source == target:
        raise UsageError("source and target must differ")
    if mode == "unrestricted":
        path = shortest_paths_from(graph, source, config, targets=[target]).best_paths[target]
    else:
        path = fixed_k_path(graph, source, target, int(mode), config.cost)
    return path.interior


def placements_from_costs(costs):
    """Cumulative normalized costs ``(0, c_1 / C, ..., 1)``; uniform if all are zero."""
    costs = np.asarray(costs, dtype=np.float64)
    if len(costs) == 0:
        raise UsageError("a placement needs at least one segment")
    total = costs.sum()
    if total <= 0:
        return np.linspace(0.0, 1.0, len(costs) + 1)
    t = np.concatenate([[0.0], np.cumsum(costs) / total])
    t[-1] = 1.0
    if np.any(np.diff(t) <= 0):
        # zero-cost segments would collapse two keyframes; fall back to uniform spacing
        return np.linspace(0.0, 1.0, len(costs) + 1)
    return t


def default_placements(path_nodes, graph, cost=TOTAL_ENTROPY):
    """Keyframe times from the direct-edge costs between consecutive path nodes."""
    path_nodes = list(path_nodes)
    if len(path_nodes) < 2:
        raise UsageError("a placement needs a path with at least two nodes")
    return placements_from_costs([cost(graph.edge(u, v)) for u, v in zip(path_nodes, path_nodes[1:])])


@dataclass
class MorphSequence:
    keyframes: list
    placements: np.ndarray
    times: np.ndarray
    frames: np.ndarray
    naive: np.ndarray
    faces: np.ndarray | None

    def frame_at(self, t):
        return _blend([k.vertices for k in self.keyframes], self.placements, t)

    def write(self, outdir, path=None):
        """Write ``frame_0000.obj ...`` and ``manifest.json``; naive frames go to ``naive/``."""
        out = FsPath(outdir)
        out.mkdir(parents=True, exist_ok=True)
        for i, verts in enumerate(self.frames):
            write_obj(out / f"frame_{i:04d}.obj", verts, self.faces)
        (out / "naive").mkdir(exist_ok=True)
        for i, verts in enumerate(self.naive):
            write_obj(out / "naive" / f"frame_{i:04d}.obj", verts, self.faces)
        manifest = {
            "path": list(path) if path is not None else [k.id for k in self.keyframes],
            "placements": [float(t) for t in self.placements],
            "times": [float(t) for t in self.times],
            "frameCount": len(self.frames),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _blend(verts, placements, t):
    if not 0.0 <= t <= 1.0:
        raise UsageError(f"time {t} outside [0, 1]")
    j = int(np.searchsorted(placements, t, side="right")) - 1
    j = min(max(j, 0), len(placements) - 2)
    ta, tb = placements[j], placements[j + 1]
    w = (t - ta) / (tb - ta)
    if w == 0.0:
        return verts[j].copy()
    if w == 1.0:
        return verts[j + 1].copy()
    return (1.0 - w) * verts[j] + w * verts[j + 1]


def morph(keyframes, placements=None, frame_count=100):
    """Piecewise linear interpolation through ``keyframes`` placed at ``placements``.

    Also returns the naive direct interpolation between the first and last
    keyframe, sampled at the same times.
    """
    keyframes = list(keyframes)
    if len(keyframes) < 2:
        raise UsageError("morphing needs at least two keyframes")
    if frame_count < 2:
        raise UsageError("frame_count must be at least 2")
    if placements is None:
        placements = np.linspace(0.0, 1.0, len(keyframes))
    placements = np.asarray(placements, dtype=np.float64)
    if len(placements) != len(keyframes):
        raise UsageError(f"{len(placements)} placements for {len(keyframes)} keyframes")
    if placements[0] != 0.0 or placements[-1] != 1.0 or np.any(np.diff(placements) <= 0):
        raise UsageError("placements must increase strictly from 0 to 1")
    src = keyframes[0]
    for kf in keyframes[1:]:
        if kf.vertices.shape != src.vertices.shape:
            raise InputError(
                f"keyframe {kf.id!r} has {len(kf.vertices)} vertices, expected {len(src.vertices)}"
            )
        same_faces = (kf.faces is None and src.faces is None) or (
            kf.faces is not None and src.faces is not None and np.array_equal(kf.faces, src.faces)
        )
        if not same_faces:
            raise InputError(f"keyframe {kf.id!r} does not share the source face list")
    verts = [k.vertices for k in keyframes]
    times = np.linspace(0.0, 1.0, frame_count)
    frames = np.stack([_blend(verts, placements, t) for t in times])
    ends = np.array([0.0, 1.0])
    naive = np.stack([_blend([verts[0], verts[-1]], ends, t) for t in times])
    return MorphSequence(keyframes, placements, times, frames, naive, src.faces)
