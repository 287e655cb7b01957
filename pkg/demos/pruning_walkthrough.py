"""How the candidate sets prune the search on a four-node scalar graph.

Edges carry 1x1 "matrices" and the cost is plain addition, so the matrix
solver behaves like an ordinary shortest-path search and every pruning
decision can be checked by hand.
"""
from matpath.core import ADDITIVE_SCALAR, compose_path
from matpath.solver import SolverConfig, brute_force_oracle, shortest_paths_from
from matpath.synthetic import pruning_example

g = pruning_example()
print("edge weights:")
for (u, v), m in sorted(g.edges().items()):
    if u < v:
        print("  %s-%s  %.1f" % (u, v, m[0, 0]))

res = shortest_paths_from(g, "s", SolverConfig(cost=ADDITIVE_SCALAR), trace=True)

# Second position: only nodes whose 1-edge path from s is cheaper than the
# direct edge s-t (3.5) may follow s. That rules out a (4.0).
# Third position: only nodes whose cheapest *2-edge* path is below the new
# incumbent s-b-t (3.0). a qualifies via s-b-a (2.8); b does not, since its
# only 2-edge path s-a-b costs 5.8.
for k, nodes in sorted(res.candidate_sets["t"].items()):
    print("T_%d(t) = {%s}" % (k, ", ".join(sorted(nodes))))

print("paths skipped by pruning:")
for t, nodes in res.pruned_paths:
    if t == "t":
        print("  %-12s cost %.1f" % ("-".join(nodes), compose_path(g, nodes, ADDITIVE_SCALAR).cost))

best = res.best_paths["t"]
print("best path %s, cost %.2f, certified=%s" % ("-".join(best.nodes), best.cost, res.certified))
oracle = brute_force_oracle(g, "s", "t", ADDITIVE_SCALAR)
print("exhaustive check: %s, cost %.2f" % ("-".join(oracle.nodes), oracle.cost))
