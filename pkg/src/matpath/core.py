"""Graphs with matrix-valued edges, path composition and path-cost functionals.

Edge matrices are plain ``float64`` numpy arrays. They are validated once, on
entry into a :class:`MatrixGraph` (or explicitly via :func:`check_edge_matrix`),
and stored read-only. Composition itself does not re-validate: the product of
two doubly-stochastic matrices is doubly stochastic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
from scipy.special import entr

from .errors import (
    DimensionMismatchError,
    GraphStructureError,
    InvalidMatrixError,
    PathError,
)

__all__ = [
    "ENTRY_TOL",
    "MARGINAL_TOL",
    "SYMMETRY_TOL",
    "check_edge_matrix",
    "is_doubly_stochastic",
    "compose",
    "total_entropy",
    "total_entropy_batch",
    "CostFunction",
    "TotalEntropy",
    "AdditiveScalar",
    "TOTAL_ENTROPY",
    "ADDITIVE_SCALAR",
    "check_monotonicity",
    "MatrixGraph",
    "Path",
    "compose_path",
]

ENTRY_TOL = 1e-9
MARGINAL_TOL = 1e-6
SYMMETRY_TOL = 1e-12
# round-off below zero that is silently clamped before taking logs
CLAMP_TOL = 1e-9


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def is_doubly_stochastic(m, tol=MARGINAL_TOL):
    """Return True if ``m`` is square, in [0, 1] and has unit row/column sums."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
        return False
    if m.min() < -ENTRY_TOL or m.max() > 1 + ENTRY_TOL:
        return False
    return bool(
        np.abs(m.sum(axis=1) - 1).max() <= tol and np.abs(m.sum(axis=0) - 1).max() <= tol
    )


def check_edge_matrix(m, tol=MARGINAL_TOL):
    """Validate an edge matrix and return a read-only float64 copy.

    Square matrices of size ``n >= 2`` must be doubly stochastic. The 1x1
    case only has to be finite and non-negative (it is the carrier of the
    additive scalar cost).
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidMatrixError(f"edge matrix must be square and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrixError("edge matrix contains NaN or Inf")
    if a.shape[0] == 1:
        if a[0, 0] < 0:
            raise InvalidMatrixError(f"scalar edge weight must be non-negative, got {a[0, 0]}")
        return _readonly(a)
    lo, hi = a.min(), a.max()
    if lo < -ENTRY_TOL or hi > 1 + ENTRY_TOL:
        raise InvalidMatrixError(f"entries must lie in [0, 1], found range [{lo:.3g}, {hi:.3g}]")
    row_dev = np.abs(a.sum(axis=1) - 1).max()
    col_dev = np.abs(a.sum(axis=0) - 1).max()
    if row_dev > tol or col_dev > tol:
        raise InvalidMatrixError(
            f"matrix is not doubly stochastic: max row deviation {row_dev:.3g}, "
            f"max column deviation {col_dev:.3g} (tol {tol:.1g})"
        )
    return _readonly(a)


def compose(a, b):
    """Matrix product ``a @ b`` of two equally sized edge matrices."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatchError(
            f"cannot compose a {a.shape[0]}x{a.shape[-1]} matrix with a "
            f"{b.shape[0]}x{b.shape[-1]} matrix"
        )
    return a @ b


def _clamped(m):
    m = np.asarray(m, dtype=np.float64)
    if m.size and m.min() < 0:
        if m.min() < -CLAMP_TOL:
            raise InvalidMatrixError(f"negative entry {m.min():.3g} in probability matrix")
        m = np.maximum(m, 0.0)
    return m


def total_entropy(m):
    """Total entropy ``-sum(x * ln x)`` over all entries, with ``0 ln 0 = 0``."""
    return float(entr(_clamped(m)).sum())


def total_entropy_batch(ms):
    """Total entropy of each matrix in a ``(..., n, n)`` stack."""
    return entr(_clamped(ms)).sum(axis=(-2, -1))


class CostFunction:
    """A non-negative path cost together with its composition operation.

    Subclasses must satisfy ``cost(identity) == 0`` and the monotonicity
    condition ``cost(compose(M, X)) >= cost(M)``; the solver's optimality
    guarantee depends on it. Use :func:`check_monotonicity` to probe a new
    cost function before trusting solver output.
    """

    name = "abstract"
    #: cost(M.T) == cost(M) and composition reverses under transposition
    symmetric = False

    def __call__(self, m) -> float:
        raise NotImplementedError

    def compose(self, a, b):
        return compose(a, b)

    def identity(self, n):
        return np.eye(n)

    def compose_batch(self, a, b):
        return np.matmul(a, b)

    def evaluate_batch(self, ms):
        ms = np.asarray(ms)
        return np.array([self(m) for m in ms.reshape(-1, *ms.shape[-2:])]).reshape(ms.shape[:-2])

    def __repr__(self):
        return f"{type(self).__name__}()"


class TotalEntropy(CostFunction):
    name = "total-entropy"
    symmetric = True

    def __call__(self, m):
        return total_entropy(m)

    def evaluate_batch(self, ms):
        return total_entropy_batch(ms)


class AdditiveScalar(CostFunction):
    """Ordinary scalar path length on 1x1 matrices: composition is addition."""

    name = "additive-scalar"
    symmetric = True

    def __call__(self, m):
        return float(np.asarray(m)[0, 0])

    def compose(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != (1, 1) or b.shape != (1, 1):
            raise DimensionMismatchError(
                f"additive scalar cost needs 1x1 matrices, got {a.shape} and {b.shape}"
            )
        return a + b

    def identity(self, n):
        if n != 1:
            raise DimensionMismatchError(f"additive scalar cost needs n=1, got n={n}")
        return np.zeros((1, 1))

    def compose_batch(self, a, b):
        return a + b

    def evaluate_batch(self, ms):
        return np.asarray(ms)[..., 0, 0].astype(np.float64)


TOTAL_ENTROPY = TotalEntropy()
ADDITIVE_SCALAR = AdditiveScalar()

COST_FUNCTIONS = {c.name: c for c in (TOTAL_ENTROPY, ADDITIVE_SCALAR)}


def check_monotonicity(cost, matrices, *, samples=1000, seed=0, tol=1e-9):
    """Probe ``cost(compose(M, X)) >= cost(M)`` on random pairs drawn from ``matrices``.

    Returns ``(ok, worst_margin)`` where ``worst_margin`` is the smallest
    observed ``cost(MX) - cost(M)``.
    """
    matrices = list(matrices)
    if not matrices:
        return True, float("inf")
    rng = np.random.default_rng(seed)
    worst = float("inf")
    for _ in range(samples):
        i, j = rng.integers(len(matrices), size=2)
        m, x = matrices[i], matrices[j]
        worst = min(worst, cost(cost.compose(m, x)) - cost(m))
    return worst >= -tol, worst


class MatrixGraph:
    """Complete directed graph whose edges carry square matrices.

    Parameters
    ----------
    nodes : sequence of str
        Node identifiers, unique.
    edges : mapping
        ``(u, v) -> matrix``. For a symmetric graph only one direction per
        unordered pair is required; the other is filled in as the transpose.
    symmetric : bool
        Enforce ``M[v, u] == M[u, v].T``.
    tol : float
        Row/column-sum tolerance used when validating edges.
    """

    def __init__(self, nodes, edges, *, symmetric=True, tol=MARGINAL_TOL):
        nodes = tuple(str(v) for v in nodes)
        if len(set(nodes)) != len(nodes):
            raise GraphStructureError("node identifiers must be unique")
        if len(nodes) < 1:
            raise GraphStructureError("graph needs at least one node")
        self.nodes = nodes
        self.symmetric = symmetric
        self._index = {v: i for i, v in enumerate(nodes)}

        table = {}
        for (u, v), m in edges.items():
            u, v = str(u), str(v)
            if u not in self._index or v not in self._index:
                raise GraphStructureError(f"edge ({u!r}, {v!r}) references an unknown node")
            if u == v:
                continue
            table[u, v] = check_edge_matrix(m, tol)

        dims = {m.shape[0] for m in table.values()}
        if len(dims) > 1:
            raise DimensionMismatchError(f"edge matrices have differing sizes {sorted(dims)}")
        self.n = dims.pop() if dims else 1

        for u in nodes:
            for v in nodes:
                if u == v:
                    continue
                if (u, v) in table:
                    continue
                if symmetric and (v, u) in table:
                    table[u, v] = _readonly(table[v, u].T)
                else:
                    raise GraphStructureError(f"graph is not complete: missing edge ({u!r}, {v!r})")
        if symmetric:
            for (u, v), m in table.items():
                dev = np.abs(m - table[v, u].T).max()
                if dev > SYMMETRY_TOL:
                    raise GraphStructureError(
                        f"edge ({u!r}, {v!r}) is not the transpose of ({v!r}, {u!r}) "
                        f"(max deviation {dev:.3g})"
                    )
        self._edges = table
        self._stack = None

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node):
        return node in self._index

    def __repr__(self):
        return f"MatrixGraph({len(self.nodes)} nodes, n={self.n})"

    def index(self, node):
        try:
            return self._index[node]
        except KeyError:
            raise PathError(f"unknown node {node!r}") from None

    def edge(self, u, v):
        """Edge matrix ``M[u, v]``; the identity on the diagonal."""
        self.index(u), self.index(v)
        if u == v:
            return np.eye(self.n)
        return self._edges[u, v]

    def edges(self):
        return dict(self._edges)

    def stacked(self):
        """All edge matrices as a read-only ``(V, V, n, n)`` array (identity on the diagonal)."""
        if self._stack is None:
            V = len(self.nodes)
            s = np.empty((V, V, self.n, self.n))
            for i, u in enumerate(self.nodes):
                for j, v in enumerate(self.nodes):
                    s[i, j] = np.eye(self.n) if i == j else self._edges[u, v]
            s.setflags(write=False)
            self._stack = s
        return self._stack

    def subgraph(self, nodes):
        nodes = list(nodes)
        return MatrixGraph(
            nodes,
            {(u, v): self._edges[u, v] for u in nodes for v in nodes if u != v},
            symmetric=self.symmetric,
        )

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        out = []
        for u in self.nodes:
            for v in self.nodes:
                if u == v or (self.symmetric and not u < v):
                    continue
                out.append({"from": u, "to": v, "matrix": self._edges[u, v].tolist()})
        out.sort(key=lambda e: (e["from"], e["to"]))
        doc = {"n": self.n, "nodes": list(self.nodes), "edges": out}
        if not self.symmetric:
            doc["symmetric"] = False
        return doc

    def to_json(self):
        # float repr is the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=None, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc, tol=MARGINAL_TOL):
        try:
            symmetric = doc.get("symmetric", True)
            edges = {(e["from"], e["to"]): np.array(e["matrix"], dtype=np.float64) for e in doc["edges"]}
            g = cls(doc["nodes"], edges, symmetric=symmetric, tol=tol)
            if "n" in doc and int(doc["n"]) != g.n and len(g.nodes) > 1:
                raise DimensionMismatchError(f"declared n={doc['n']} but edges are {g.n}x{g.n}")
        except (KeyError, TypeError) as exc:
            raise GraphStructureError(f"malformed graph document: {exc}") from None
        return g

    @classmethod
    def from_json(cls, text, tol=MARGINAL_TOL):
        return cls.from_dict(json.loads(text), tol=tol)

    def save(self, path):
        FsPath(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path, tol=MARGINAL_TOL):
        return cls.from_json(FsPath(path).read_text(), tol=tol)


@dataclass(frozen=True, eq=False)
class Path:
    """A simple path with its composed edge matrix and cost."""

    nodes: tuple
    composed: np.ndarray
    cost: float

    @property
    def source(self):
        return self.nodes[0]

    @property
    def target(self):
        return self.nodes[-1]

    @property
    def num_edges(self):
        return len(self.nodes) - 1

    @property
    def interior(self):
        return tuple(self.nodes[1:-1])

    def __repr__(self):
        return f"Path({' -> '.join(self.nodes)}, cost={self.cost:.6g})"


def compose_path(graph, nodes, cost=TOTAL_ENTROPY):
    """Compose the edge matrices along ``nodes`` left to right and evaluate ``cost``."""
    nodes = tuple(nodes)
    if not nodes:
        raise PathError("a path needs at least one node")
    for v in nodes:
        graph.index(v)
    if len(set(nodes)) != len(nodes):
        raise PathError(f"path {nodes} repeats a node (only simple paths are allowed)")
    m = cost.identity(graph.n)
    if len(nodes) == 1:
        return Path(nodes, _readonly(m), 0.0)
    m = graph.edge(nodes[0], nodes[1])
    for u, v in zip(nodes[1:-1], nodes[2:]):
        m = cost.compose(m, graph.edge(u, v))
    return Path(nodes, _readonly(m), cost(m))
