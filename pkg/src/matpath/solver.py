"""Exact shortest paths in complete graphs with matrix-valued edges.

The search proceeds by edge count ``k = 2, 3, ...``. For every target ``t``
it keeps an incumbent path (initially the direct edge) and, per position
``i`` of a prospective path ``(s, u_2, ..., u_k, t)``, a candidate set
``T_i(t)`` of nodes allowed at that position. A node ``p`` enters
``T_k(t)`` only if the cheapest path ``s -> p`` with exactly ``k - 1`` edges
is strictly cheaper than the incumbent for ``t``. Monotonicity of the cost
(``f(M X) >= f(M)``) makes this pruning exact, and the search ends once no
target has a candidate path left.

Exactly-``(k-1)``-edge minima are tracked over all ``(k-1)``-edge prefixes
whose cost is below the largest incumbent. A prefix at or above that bound
can not be extended into an improvement for any target, so dropping it
never changes a candidate set.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import TOTAL_ENTROPY, CostFunction, Path, compose_path
from .errors import InfeasibleError, OracleLimitError, UsageError

__all__ = [
    "TIE_TOL",
    "SolverConfig",
    "ShortestPathResult",
    "AllPairsResult",
    "better",
    "candidate_set",
    "shortest_paths_from",
    "shortest_path",
    "fixed_k_path",
    "brute_force_oracle",
    "all_pairs",
]

TIE_TOL = 1e-12
ORACLE_MAX_NODES = 9
# upper bound on floats materialized per batched extension step
_CHUNK_FLOATS = 4_000_000


@dataclass(frozen=True)
class SolverConfig:
    """Search settings.

    ``k_max`` caps the number of edges per path (``None``: no cap, which
    certifies global optimality). Setting ``fixed_k`` selects the
    exactly-``k``-edges mode handled by :func:`fixed_k_path`.
    """

    k_max: int | None = None
    cost: CostFunction = TOTAL_ENTROPY
    fixed_k: int | None = None

    def __post_init__(self):
        if self.k_max is not None and self.k_max < 1:
            raise UsageError(f"k_max must be >= 1, got {self.k_max}")
        if self.fixed_k is not None and self.fixed_k < 1:
            raise UsageError(f"fixed k must be >= 1, got {self.fixed_k}")

    @property
    def mode(self):
        if self.fixed_k is not None:
            return "fixed-k"
        return "CERT" if self.k_max is None else "SP"


@dataclass
class ShortestPathResult:
    source: str
    best_paths: dict
    certified: bool
    mode: str
    edges_explored: int = 0
    paths_evaluated: int = 0
    pruned_count: int = 0
    wall_time: float = 0.0
    k_reached: int = 1
    #: target -> {k: frozenset of node ids}
    candidate_sets: dict = field(default_factory=dict)
    #: (target, node tuple) of every k-edge path excluded by the candidate sets;
    #: only filled when the search runs with ``trace=True``
    pruned_paths: list | None = None

    def to_dict(self, timing=True):
        return {
            "source": self.source,
            "targets": [
                {
                    "target": t,
                    "path": list(p.nodes),
                    "cost": p.cost,
                    "certified": self.certified,
                }
                for t, p in sorted(self.best_paths.items())
            ],
            "stats": {
                "mode": self.mode,
                "pathsEvaluated": self.paths_evaluated,
                "prunedCount": self.pruned_count,
                "wallTimeSeconds": self.wall_time if timing else None,
            },
        }


def better(cost, nodes, best_cost, best_nodes):
    """True if ``(cost, nodes)`` beats the incumbent: lower cost, or a tie broken lexicographically."""
    if best_nodes is None:
        return True
    if cost < best_cost - TIE_TOL:
        return True
    return abs(cost - best_cost) <= TIE_TOL and tuple(nodes) < tuple(best_nodes)


def candidate_set(exact_costs, incumbent_cost, target, source=None):
    """Nodes admissible at the next path position for ``target``.

    Parameters
    ----------
    exact_costs : mapping
        node -> cost of the cheapest path from the source with exactly
        ``k - 1`` edges (missing or ``inf`` when there is none).
    incumbent_cost : float
        Cost of the current best path to ``target``.
    """
    return frozenset(
        p
        for p, c in exact_costs.items()
        if p != target and p != source and c < incumbent_cost
    )


def _nodes_of(names, row, tail=None):
    out = tuple(names[i] for i in row)
    return out if tail is None else out + (names[tail],)


def _extend(cost, composed, E, last, li, vi):
    """Compose prefixes ``li`` with edges ``last[li] -> vi`` in memory-bounded chunks."""
    n = E.shape[-1]
    step = max(1, _CHUNK_FLOATS // (n * n))
    out = np.empty((len(li), n, n))
    costs = np.empty(len(li))
    for a in range(0, len(li), step):
        b = a + step
        m = cost.compose_batch(composed[li[a:b]], E[last[li[a:b]], vi[a:b]])
        out[a:b] = m
        costs[a:b] = cost.evaluate_batch(m)
    return out, costs


def shortest_paths_from(graph, source, config=None, *, targets=None, trace=False):
    """Shortest paths from ``source`` to every target.

    Without ``config.k_max`` the result is globally optimal and
    ``certified``. With a cap the search stops after ``k_max`` edges and is
    certified only if it terminated naturally before reaching the cap.

    Parameters
    ----------
    graph : MatrixGraph
    source : str
    config : SolverConfig, optional
    targets : iterable of str, optional
        Restrict the search to these targets (default: all other nodes).
    trace : bool
        Record the node sequences excluded by the candidate sets.
    """
    config = config or SolverConfig()
    if config.fixed_k is not None:
        raise UsageError("fixed-k mode is not a single-source search; use fixed_k_path")
    cost = config.cost
    t0 = time.perf_counter()

    names = graph.nodes
    V = len(names)
    s = graph.index(source)
    if targets is None:
        tgt = [i for i in range(V) if i != s]
    else:
        tgt = sorted({graph.index(t) for t in targets} - {s})
    is_target = np.zeros(V, dtype=bool)
    is_target[tgt] = True

    E = graph.stacked()
    n = graph.n

    inc_cost = np.full(V, np.inf)
    inc_nodes = {}
    inc_mat = {}
    for t in tgt:
        inc_cost[t] = cost(E[s, t])
        inc_nodes[t] = (names[s], names[t])
        inc_mat[t] = E[s, t]

    result = ShortestPathResult(
        source=names[s],
        best_paths={},
        certified=False,
        mode=config.mode,
        pruned_paths=[] if trace else None,
    )
    cand_hist = {names[t]: {} for t in tgt}

    # live prefixes: every (k-1)-edge simple path from s whose cost is below the
    # largest incumbent; adm[j, t] says positions 2..k-1 of prefix j are admissible for t
    others = np.array([i for i in range(V) if i != s], dtype=np.intp)
    paths = np.column_stack([np.full(len(others), s, dtype=np.intp), others])
    composed = np.array(E[s, others]).reshape(len(others), n, n)
    costs = np.array([cost(m) for m in composed]) if len(others) else np.empty(0)
    adm = np.ones((len(others), V), dtype=bool)

    k_limit = V - 1 if config.k_max is None else min(config.k_max, V - 1)
    certified = k_limit >= V - 1 and k_limit <= 1
    k = 1
    for k in range(2, k_limit + 1):
        L = len(paths)
        last = paths[:, -1]
        exact = np.full(V, np.inf)
        if L:
            np.minimum.at(exact, last, costs)
        exact[s] = np.inf

        member = exact[:, None] < inc_cost[None, :]
        np.fill_diagonal(member, False)
        member[:, ~is_target] = False
        for t in tgt:
            cand_hist[names[t]][k] = frozenset(names[p] for p in np.flatnonzero(member[:, t]))

        if L == 0:
            certified = True
            break
        in_path = np.zeros((L, V), dtype=bool)
        in_path[np.arange(L)[:, None], paths] = True
        open_pairs = ~in_path & is_target[None, :]
        adm_next = adm & member[last]
        mask = adm_next & open_pairs
        n_open = int(open_pairs.sum())
        if not mask.any():
            result.pruned_count += n_open
            if trace:
                _record_pruned(result, names, paths, open_pairs)
            certified = True
            break

        final = k == k_limit
        if final:
            li, ti = np.nonzero(mask)
            ext, ext_cost = _extend(cost, composed, E, last, li, ti)
            cand = np.arange(len(li))
        else:
            li, ti = np.nonzero(~in_path)
            ext, ext_cost = _extend(cost, composed, E, last, li, ti)
            cand = np.flatnonzero(mask[li, ti])
        result.edges_explored += len(li)
        result.paths_evaluated += len(cand)
        result.pruned_count += n_open - len(cand)
        if trace:
            _record_pruned(result, names, paths, open_pairs & ~mask)

        _update_incumbents(
            names, paths, li[cand], ti[cand], ext[cand], ext_cost[cand], inc_cost, inc_nodes, inc_mat
        )

        if final:
            certified = k_limit == V - 1
            break

        theta = inc_cost[is_target].max()
        keep = ext_cost < theta
        paths = np.column_stack([paths[li[keep]], ti[keep]])
        composed = ext[keep]
        costs = ext_cost[keep]
        adm = adm_next[li[keep]]
    result.k_reached = k

    for t in tgt:
        result.best_paths[names[t]] = Path(inc_nodes[t], _frozen(inc_mat[t]), float(inc_cost[t]))
    result.candidate_sets = cand_hist
    result.certified = bool(certified)
    result.wall_time = time.perf_counter() - t0
    return result


def _frozen(m):
    m = np.array(m, dtype=np.float64)
    m.setflags(write=False)
    return m


def _record_pruned(result, names, paths, pairs):
    for j, t in zip(*np.nonzero(pairs)):
        result.pruned_paths.append((names[t], _nodes_of(names, paths[j], t)))


def _update_incumbents(names, paths, li, ti, ext, ext_cost, inc_cost, inc_nodes, inc_mat):
    if len(ti) == 0:
        return
    order = np.lexsort((ext_cost, ti))
    ts = ti[order]
    bounds = np.flatnonzero(np.r_[True, ts[1:] != ts[:-1], True])
    for a, b in zip(bounds[:-1], bounds[1:]):
        group = order[a:b]
        t = int(ts[a])
        cmin = ext_cost[group[0]]
        tied = [j for j in group if ext_cost[j] <= cmin + TIE_TOL]
        j = min(tied, key=lambda j: _nodes_of(names, paths[li[j]], t))
        nodes = _nodes_of(names, paths[li[j]], t)
        if better(ext_cost[j], nodes, inc_cost[t], inc_nodes[t]):
            inc_cost[t] = ext_cost[j]
            inc_nodes[t] = nodes
            inc_mat[t] = ext[j]


def _trivial(graph, node, cost):
    return compose_path(graph, (node,), cost)


def fixed_k_path(graph, source, target, k, cost=TOTAL_ENTROPY):
    """Cheapest simple path from ``source`` to ``target`` with exactly ``k`` edges.

    Depth-first branch and bound in lexicographic node order; a prefix is cut
    as soon as its own cost reaches the incumbent, which monotonicity makes a
    valid lower bound for every completion. Ties go to the lexicographically
    smallest node sequence.
    """
    V = len(graph.nodes)
    graph.index(source), graph.index(target)
    if source == target:
        raise InfeasibleError("source equals target: no simple path with k >= 1 edges")
    if k < 1 or k > V - 1:
        raise InfeasibleError(f"no simple path with exactly {k} edges in a {V}-node graph")
    if k == 1:
        return compose_path(graph, (source, target), cost)

    interior = sorted(v for v in graph.nodes if v != source and v != target)
    best = {"cost": np.inf, "nodes": None, "m": None}

    def dfs(prefix, m, c):
        if c >= best["cost"] - TIE_TOL:
            return
        if len(prefix) == k:
            mm = cost.compose(m, graph.edge(prefix[-1], target))
            cc = cost(mm)
            nodes = prefix + (target,)
            if better(cc, nodes, best["cost"], best["nodes"]):
                best.update(cost=cc, nodes=nodes, m=mm)
            return
        for v in interior:
            if v in prefix:
                continue
            mm = cost.compose(m, graph.edge(prefix[-1], v))
            dfs(prefix + (v,), mm, cost(mm))

    for v in interior:
        m = graph.edge(source, v)
        dfs((source, v), m, cost(m))
    return Path(best["nodes"], _frozen(best["m"]), float(best["cost"]))


def brute_force_oracle(graph, source, target, cost=TOTAL_ENTROPY, k_max=None, *, max_nodes=ORACLE_MAX_NODES):
    """Enumerate every simple path ``source -> target`` and return the cheapest.

    Each path is composed from scratch; nothing is shared with the pruned
    search. Refuses graphs with more than ``max_nodes`` nodes.
    """
    V = len(graph.nodes)
    if V > max_nodes:
        raise OracleLimitError(f"brute-force oracle is limited to {max_nodes} nodes, graph has {V}")
    graph.index(source), graph.index(target)
    if source == target:
        return _trivial(graph, source, cost)
    interior = sorted(v for v in graph.nodes if v != source and v != target)
    limit = V - 1 if k_max is None else min(k_max, V - 1)

    found = []
    for j in range(0, limit):
        for mid in itertools.permutations(interior, j):
            found.append(compose_path(graph, (source, *mid, target), cost))
    cmin = min(p.cost for p in found)
    return min((p for p in found if p.cost <= cmin + TIE_TOL), key=lambda p: p.nodes)


def shortest_path(graph, source, target, config=None):
    """Single source/target query honouring every solver mode."""
    config = config or SolverConfig()
    if source == target:
        graph.index(source)
        return _trivial(graph, source, config.cost)
    if config.fixed_k is not None:
        return fixed_k_path(graph, source, target, config.fixed_k, config.cost)
    return shortest_paths_from(graph, source, config, targets=[target]).best_paths[target]


@dataclass
class AllPairsResult:
    paths: dict
    results: list
    mode: str

    def __getitem__(self, key):
        return self.paths[key]

    def items(self):
        return self.paths.items()

    @property
    def certified(self):
        return all(r.certified for r in self.results)

    @property
    def paths_evaluated(self):
        return sum(r.paths_evaluated for r in self.results)

    @property
    def pruned_count(self):
        return sum(r.pruned_count for r in self.results)

    @property
    def edges_explored(self):
        return sum(r.edges_explored for r in self.results)


def _reverse(path):
    return Path(tuple(reversed(path.nodes)), _frozen(path.composed.T), path.cost)


def all_pairs(graph, config=None, *, threads=1):
    """Shortest paths between all ordered node pairs.

    With a transpose-symmetric graph and cost, each unordered pair is solved
    once and the reverse direction is the reversed path. Sources may be
    processed on ``threads`` worker threads; the result does not depend on it.
    """
    config = config or SolverConfig()
    if config.fixed_k is not None:
        raise UsageError("all_pairs does not support fixed-k mode")
    names = graph.nodes
    mirror = graph.symmetric and config.cost.symmetric

    def solve(i):
        tg = names[i + 1:] if mirror else [v for v in names if v != names[i]]
        if not tg:
            return None
        return shortest_paths_from(graph, names[i], config, targets=tg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, range(len(names))))
    else:
        results = [solve(i) for i in range(len(names))]

    paths = {(v, v): _trivial(graph, v, config.cost) for v in names}
    for r in results:
        if r is None:
            continue
        for t, p in r.best_paths.items():
            paths[r.source, t] = p
            if mirror:
                paths[t, r.source] = _reverse(p)
    return AllPairsResult(paths=paths, results=[r for r in results if r is not None], mode=config.mode)
