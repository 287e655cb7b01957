import heapq
import itertools

import numpy as np
import pytest

from matpath.core import ADDITIVE_SCALAR, MatrixGraph, compose, compose_path, total_entropy
from matpath.errors import InfeasibleError, OracleLimitError, UsageError
from matpath.solver import (
    SolverConfig,
    all_pairs,
    brute_force_oracle,
    candidate_set,
    fixed_k_path,
    shortest_path,
    shortest_paths_from,
)
from matpath.synthetic import pruning_example, random_graph, random_scalar_graph

SCALAR = SolverConfig(cost=ADDITIVE_SCALAR)


def perm_uniform_graph():
    p = np.eye(4)[[1, 2, 3, 0]]
    return MatrixGraph(["s", "t", "u"], {("s", "u"): p, ("u", "t"): p, ("s", "t"): np.full((4, 4), 0.25)})


def test_two_node_graph():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 2, 3)
    res = shortest_paths_from(g, "v0")
    assert res.best_paths["v1"].nodes == ("v0", "v1")
    assert res.best_paths["v1"].cost == total_entropy(g.edge("v0", "v1"))
    assert res.certified
    assert brute_force_oracle(g, "v0", "v1").nodes == ("v0", "v1")


def test_permutation_detour_beats_uniform():
    g = perm_uniform_graph()
    res = shortest_paths_from(g, "s")
    assert res.best_paths["t"].nodes == ("s", "u", "t")
    assert res.best_paths["t"].cost == 0.0
    assert res.certified and res.mode == "CERT"
    assert brute_force_oracle(g, "s", "t").nodes == ("s", "u", "t")


def test_pruning_example_candidate_sets():
    g = pruning_example()
    res = shortest_paths_from(g, "s", SCALAR)
    sets = res.candidate_sets["t"]
    assert sets[2] == {"b"}
    assert sets[3] == {"a"}
    best = res.best_paths["t"]
    assert best.nodes == ("s", "b", "a", "t")
    assert best.cost == pytest.approx(2.9, abs=1e-12)
    assert res.certified
    # the path costs the instance is built around
    assert compose_path(g, ("s", "a"), ADDITIVE_SCALAR).cost == 4.0
    assert compose_path(g, ("s", "t"), ADDITIVE_SCALAR).cost == 3.5
    assert compose_path(g, ("s", "b", "a"), ADDITIVE_SCALAR).cost == pytest.approx(2.8)
    assert compose_path(g, ("s", "b", "t"), ADDITIVE_SCALAR).cost == pytest.approx(3.0)


def test_zero_cost_direct_edge_prunes_everything():
    rng = np.random.default_rng(1)
    g = random_graph(rng, 5, 3)
    edges = {(u, v): g.edge(u, v) for u, v in itertools.combinations(g.nodes, 2)}
    edges["v0", "v4"] = np.eye(3)[[2, 0, 1]]
    g = MatrixGraph(g.nodes, edges)
    res = shortest_paths_from(g, "v0", targets=["v4"])
    assert all(not s for s in res.candidate_sets["v4"].values())
    assert res.best_paths["v4"].nodes == ("v0", "v4")


def test_candidate_set_helper():
    exact = {"s": 0.0, "a": 1.0, "b": 2.0, "t": 0.5, "c": np.inf}
    assert candidate_set(exact, 1.5, "t", "s") == {"a"}
    assert candidate_set(exact, 1.0, "t", "s") == frozenset()


def test_oracle_equivalence_small_sample():
    rng = np.random.default_rng(100)
    for _ in range(25):
        g = random_graph(rng, int(rng.integers(4, 8)), int(rng.integers(3, 7)))
        for s in g.nodes:
            res = shortest_paths_from(g, s)
            assert res.certified
            for t, p in res.best_paths.items():
                o = brute_force_oracle(g, s, t)
                assert abs(o.cost - p.cost) <= 1e-9
                assert o.nodes == p.nodes


def dijkstra(weights, source):
    """Textbook Dijkstra over a dense weight matrix."""
    V = len(weights)
    dist = [np.inf] * V
    dist[source] = 0.0
    done = [False] * V
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v in range(V):
            if v != u and d + weights[u][v] < dist[v]:
                dist[v] = d + weights[u][v]
                heapq.heappush(heap, (dist[v], v))
    return dist


def test_scalar_reduction_against_dijkstra():
    rng = np.random.default_rng(7)
    for _ in range(30):
        V = int(rng.integers(3, 13))
        g = random_scalar_graph(rng, V, 0.0, 10.0)
        W = [[g.edge(u, v)[0, 0] if u != v else 0.0 for v in g.nodes] for u in g.nodes]
        ref = dijkstra(W, 0)
        res = shortest_paths_from(g, g.nodes[0], SCALAR)
        for j, t in enumerate(g.nodes[1:], start=1):
            assert abs(res.best_paths[t].cost - ref[j]) <= 1e-12


def test_pruned_paths_never_beat_optimum():
    rng = np.random.default_rng(21)
    seen = 0
    for _ in range(15):
        g = random_graph(rng, int(rng.integers(5, 8)), 4)
        s = g.nodes[0]
        res = shortest_paths_from(g, s, trace=True)
        for t, nodes in res.pruned_paths:
            seen += 1
            assert compose_path(g, nodes).cost >= res.best_paths[t].cost - 1e-9
    assert seen > 0


def test_anytime_property():
    rng = np.random.default_rng(3)
    for _ in range(10):
        g = random_graph(rng, 7, 4)
        s = g.nodes[0]
        prev = None
        for K in range(1, 7):
            res = shortest_paths_from(g, s, SolverConfig(k_max=K))
            costs = {t: p.cost for t, p in res.best_paths.items()}
            if K == 1:
                assert costs == {t: total_entropy(g.edge(s, t)) for t in costs}
                assert all(p.num_edges == 1 for p in res.best_paths.values())
            else:
                assert all(costs[t] <= prev[t] for t in costs)
            prev = costs
        assert res.certified
        full = shortest_paths_from(g, s)
        assert {t: p.cost for t, p in full.best_paths.items()} == prev


def test_capped_search_is_not_certified_before_termination():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 6, 4)
    res = shortest_paths_from(g, "v0", SolverConfig(k_max=1))
    assert res.mode == "SP" and not res.certified


def _subpath_caution_instance():
    """A graph whose optimal s-t path has a prefix that is not optimal to its own endpoint."""
    for seed in range(300):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 5, 3)
        s = g.nodes[0]
        for t in g.nodes[1:]:
            best = brute_force_oracle(g, s, t)
            for cut in range(2, len(best.nodes) - 1):
                prefix = best.nodes[:cut + 1]
                sub = brute_force_oracle(g, s, prefix[-1])
                if sub.cost < compose_path(g, prefix).cost - 1e-6:
                    return g, s, t, best
    raise AssertionError("no instance found")


def test_optimal_path_without_optimal_substructure():
    g, s, t, best = _subpath_caution_instance()
    found = shortest_paths_from(g, s).best_paths[t]
    assert found.nodes == best.nodes
    assert abs(found.cost - best.cost) <= 1e-9


def test_fixed_k_against_enumeration():
    rng = np.random.default_rng(8)
    for _ in range(10):
        g = random_graph(rng, 6, 4)
        s, t = g.nodes[0], g.nodes[5]
        mids = [v for v in g.nodes if v not in (s, t)]
        ref = min(
            (compose_path(g, (s, a, b, t)) for a, b in itertools.permutations(mids, 2)),
            key=lambda p: (p.cost, p.nodes),
        )
        got = fixed_k_path(g, s, t, 3)
        assert got.nodes == ref.nodes
        assert abs(got.cost - ref.cost) <= 1e-12
        assert fixed_k_path(g, s, t, 1).nodes == (s, t)


def test_fixed_k_small_and_infeasible():
    g = perm_uniform_graph()
    assert fixed_k_path(g, "s", "t", 2).nodes == ("s", "u", "t")
    with pytest.raises(InfeasibleError):
        fixed_k_path(g, "s", "t", 3)
    with pytest.raises(InfeasibleError):
        fixed_k_path(g, "s", "s", 1)
    assert shortest_path(g, "s", "t", SolverConfig(fixed_k=1)).nodes == ("s", "t")


def test_trivial_query():
    g = perm_uniform_graph()
    p = shortest_path(g, "u", "u")
    assert p.nodes == ("u",) and p.cost == 0.0


def test_oracle_limits_and_cap():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 10, 2)
    with pytest.raises(OracleLimitError):
        brute_force_oracle(g, "v0", "v1")
    small = random_graph(rng, 6, 4)
    for K in (1, 2, 3):
        o = brute_force_oracle(small, "v0", "v5", k_max=K)
        s = shortest_paths_from(small, "v0", SolverConfig(k_max=K)).best_paths["v5"]
        assert o.num_edges <= K
        assert abs(o.cost - s.cost) <= 1e-9


def test_config_validation():
    with pytest.raises(UsageError):
        SolverConfig(k_max=0)
    with pytest.raises(UsageError):
        shortest_paths_from(perm_uniform_graph(), "s", SolverConfig(fixed_k=2))


def test_all_pairs_metric_properties():
    rng = np.random.default_rng(4)
    g = random_graph(rng, 7, 5)
    ap = all_pairs(g)
    assert ap.certified
    names = g.nodes
    for x in names:
        assert ap[x, x].cost == 0.0
    for x, y in itertools.permutations(names, 2):
        assert abs(ap[x, y].cost - ap[y, x].cost) <= 1e-9
        assert ap[x, y].cost >= 0
        assert ap[y, x].nodes == ap[x, y].nodes[::-1]
    for x, y, z in itertools.permutations(names, 3):
        bound = total_entropy(compose(ap[x, y].composed, ap[y, z].composed))
        assert ap[x, z].cost <= bound + 1e-9


def test_determinism_across_threads():
    rng = np.random.default_rng(9)
    g = random_graph(rng, 9, 5)
    a = all_pairs(g, threads=1)
    b = all_pairs(g, threads=4)
    for (key, p), (key2, q) in zip(a.items(), b.items()):
        assert key == key2 and p.nodes == q.nodes and p.cost == q.cost
        assert np.array_equal(p.composed, q.composed)
    assert a.paths_evaluated == b.paths_evaluated


def test_result_json_shape():
    res = shortest_paths_from(pruning_example(), "s", SCALAR)
    doc = res.to_dict(timing=False)
    assert doc["source"] == "s"
    assert [e["target"] for e in doc["targets"]] == ["a", "b", "t"]
    assert doc["stats"]["wallTimeSeconds"] is None
    assert set(doc["stats"]) == {"mode", "pathsEvaluated", "prunedCount", "wallTimeSeconds"}
