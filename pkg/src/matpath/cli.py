"""Command-line front end: ``matpath <command> ...``.

Exit codes: 0 success, 2 input/validation error, 3 solver infeasibility,
4 convergence failure. Failures print one ``matpath: error[<code>]: ...``
line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from itertools import permutations
from pathlib import Path

import numpy as np

from . import analysis, builder, meshio, solver, synthetic
from .core import COST_FUNCTIONS, TOTAL_ENTROPY, MatrixGraph, check_monotonicity, compose, total_entropy
from .errors import InputError, MatPathError, UsageError


def _cost(name):
    return COST_FUNCTIONS[name]


def _load_graph(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"graph file {path} does not exist")
    try:
        return MatrixGraph.load(p)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- build-graph ---------------------------------------------------------


def _collect_meshes(inputs):
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(meshio.mesh_files(p))
        elif p.is_file():
            files.append(p)
        else:
            raise InputError(f"input {item} does not exist")
    if not files:
        raise InputError("no OFF/OBJ meshes found in the inputs")
    return files


def _builder_config(args):
    overrides = dict(
        n=args.n,
        p=args.p,
        sigma=args.sigma,
        sinkhorn_tol=args.sinkhorn_tol,
        sinkhorn_max_iter=args.sinkhorn_max_iter,
        kmeans_seed=args.seed,
        kmeans_restarts=args.restarts,
        descriptor_bins=args.bins,
    )
    if args.no_builtin_descriptor:
        overrides["use_builtin_descriptor"] = False
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file {path} does not exist")
        return builder.BuilderConfig.from_dict(json.loads(path.read_text()), **overrides)
    if args.preset:
        return builder.BuilderConfig.preset(args.preset, **overrides)
    return builder.BuilderConfig.from_dict({}, **overrides)


def cmd_build_graph(args):
    config = _builder_config(args)
    shapes = []
    for mesh in _collect_meshes(args.inputs):
        feat = None
        if args.features:
            cand = Path(args.features) / f"{mesh.stem}.csv"
            if cand.is_file():
                feat = cand
            elif not config.use_builtin_descriptor:
                raise InputError(f"shape {mesh.stem!r}: missing feature file {cand}")
        elif not config.use_builtin_descriptor:
            raise InputError(f"shape {mesh.stem!r}: no --features directory and built-in descriptor disabled")
        shapes.append(meshio.load_shape(mesh, feat))

    if args.emit_config:
        Path(args.emit_config).write_text(config.to_json() + "\n")
    if args.print_distances:
        for q, v in builder.distance_summary(shapes, config).items():
            print(f"p{q:<3d} {v:.6g}")
        if not args.output:
            return 0
    graph = builder.build_graph(shapes, config, threads=args.threads)
    _emit(graph.to_json() + "\n", args.output)
    return 0


# -- shortest-path -------------------------------------------------------


def _solver_config(args):
    return solver.SolverConfig(k_max=args.k_max, cost=_cost(args.cost))


def cmd_shortest_path(args):
    graph = _load_graph(args.graph)
    cost = _cost(args.cost)
    s, t = args.source, args.target
    graph.index(s), graph.index(t)
    t0 = time.perf_counter()
    certified = False
    stats = {"mode": None, "pathsEvaluated": 0, "prunedCount": 0}
    if s == t:
        path = solver.shortest_path(graph, s, t, solver.SolverConfig(cost=cost))
        certified = True
        stats["mode"] = "trivial"
    elif args.brute_force:
        path = solver.brute_force_oracle(graph, s, t, cost, args.k_max)
        certified = args.k_max is None
        stats["mode"] = "brute-force"
    elif args.fixed_k is not None:
        path = solver.fixed_k_path(graph, s, t, args.fixed_k, cost)
        certified = True
        stats["mode"] = "fixed-k"
    else:
        k_max = None if args.certify else args.k_max
        res = solver.shortest_paths_from(graph, s, solver.SolverConfig(k_max=k_max, cost=cost), targets=[t])
        path = res.best_paths[t]
        certified = res.certified
        stats.update(mode=res.mode, pathsEvaluated=res.paths_evaluated, prunedCount=res.pruned_count)
    stats["wallTimeSeconds"] = time.perf_counter() - t0 if args.timing else None

    if args.json:
        doc = {
            "source": s,
            "targets": [{"target": t, "path": list(path.nodes), "cost": path.cost, "certified": certified}],
            "stats": stats,
        }
        _emit(json.dumps(doc) + "\n", args.output)
    else:
        _emit(f"{' -> '.join(path.nodes)}\t{path.cost!r}\n", args.output)
    return 0


def cmd_all_pairs(args):
    graph = _load_graph(args.graph)
    table = analysis.shape_distance_table(graph, _solver_config(args), threads=args.threads)
    _emit(json.dumps(table.to_dict(), separators=(",", ":")) + "\n", args.output)
    return 0


# -- retrieve ------------------------------------------------------------


def _load_labels(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"labels file {path} does not exist")
    if p.suffix.lower() == ".json":
        return {str(k): str(v) for k, v in json.loads(p.read_text()).items()}
    labels = {}
    with p.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] in ("node", "id", "shape"):
                continue
            if len(row) < 2:
                raise InputError(f"{path}: expected 'node,label' rows")
            labels[row[0].strip()] = row[1].strip()
    return labels


def cmd_retrieve(args):
    if bool(args.graph) == bool(args.table):
        raise UsageError("give exactly one of --graph or --table")
    if args.table:
        table = analysis.DistanceTable.load(args.table)
    else:
        table = analysis.shape_distance_table(_load_graph(args.graph), _solver_config(args), threads=args.threads)
    ev = analysis.evaluate_retrieval(table, _load_labels(args.labels))
    ev.write_csv(args.output, args.long)
    return 0


# -- intermediate / morph --------------------------------------------------


def cmd_intermediate(args):
    graph = _load_graph(args.graph)
    mode = args.fixed_k if args.fixed_k is not None else "unrestricted"
    mids = analysis.intermediate_shapes(graph, args.source, args.target, mode, _solver_config(args))
    if args.json:
        _emit(json.dumps({"source": args.source, "target": args.target, "intermediates": mids}) + "\n", args.output)
    else:
        _emit("".join(m + "\n" for m in mids), args.output)
    return 0


def cmd_morph(args):
    graph = _load_graph(args.graph)
    config = _solver_config(args)
    if args.fixed_k is not None:
        path = solver.fixed_k_path(graph, args.source, args.target, args.fixed_k, config.cost)
    else:
        path = solver.shortest_path(graph, args.source, args.target, config)
    meshes = {p.stem: p for p in meshio.mesh_files(args.meshes)}
    missing = [v for v in path.nodes if v not in meshes]
    if missing:
        raise InputError(f"no mesh for node(s) {missing} in {args.meshes}")
    keyframes = [meshio.load_shape(meshes[v]) for v in path.nodes]
    if args.placements:
        placements = [float(x) for x in args.placements.split(",")]
    else:
        placements = analysis.default_placements(path.nodes, graph, config.cost)
    seq = analysis.morph(keyframes, placements, args.frames)
    seq.write(args.output, path.nodes)
    return 0


# -- bench ---------------------------------------------------------------


BENCH_FIELDS = [
    "dataset",
    "nodes",
    "n",
    "k_max",
    "sp_seconds",
    "cert_seconds",
    "sp_paths_evaluated",
    "cert_paths_evaluated",
    "sp_pruned",
    "cert_pruned",
    "cert_certified",
]


def run_bench(graph, dataset, modes, k_max, threads=1):
    row = {"dataset": dataset, "nodes": len(graph.nodes), "n": graph.n, "k_max": k_max if "sp" in modes else ""}
    for mode in ("sp", "cert"):
        if mode not in modes:
            for key in ("seconds", "paths_evaluated", "pruned"):
                row[f"{mode}_{key}"] = ""
            continue
        cfg = solver.SolverConfig(k_max=k_max if mode == "sp" else None)
        t0 = time.perf_counter()
        res = solver.all_pairs(graph, cfg, threads=threads)
        row[f"{mode}_seconds"] = time.perf_counter() - t0
        row[f"{mode}_paths_evaluated"] = res.paths_evaluated
        row[f"{mode}_pruned"] = res.pruned_count
        if mode == "cert":
            row["cert_certified"] = res.certified
    row.setdefault("cert_certified", "")
    return row


def cmd_bench(args):
    modes = {m.strip().lower() for m in args.modes.split(",")}
    if not modes <= {"sp", "cert"}:
        raise UsageError(f"unknown bench mode(s) {sorted(modes - {'sp', 'cert'})}")
    jobs = []
    for g in args.graphs:
        jobs.append((Path(g).stem, _load_graph(g)))
    if args.random:
        rng = np.random.default_rng(args.seed)
        jobs.append((f"random-{args.random}x{args.dim}", synthetic.random_graph(rng, args.random, args.dim)))
    if not jobs:
        raise UsageError("nothing to benchmark: give graph files or --random")
    rows = [run_bench(g, name, modes, args.k_max, args.threads) for name, g in jobs]
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.output:
            out.close()
    return 0


# -- validate ------------------------------------------------------------


def validate_graph(graph, *, samples=1000, seed=0, oracle_nodes=7, metric_nodes=10):
    """Run the invariant/oracle suite on a graph; returns ``[(name, ok, detail)]``."""
    checks = []
    edges = list(graph.edges().values())
    if graph.n > 1:
        dev = max(
            max(np.abs(m.sum(axis=0) - 1).max(), np.abs(m.sum(axis=1) - 1).max()) for m in edges
        ) if edges else 0.0
        checks.append(("doubly-stochastic", dev <= 1e-6, f"max marginal deviation {dev:.3g}"))
        ok, worst = check_monotonicity(TOTAL_ENTROPY, edges, samples=samples, seed=seed)
        checks.append(("entropy-monotonicity", ok, f"worst margin {worst:.3g}"))
    sym = graph.symmetric and all(
        np.abs(graph.edge(u, v) - graph.edge(v, u).T).max() <= 1e-12
        for u in graph.nodes for v in graph.nodes if u < v
    )
    checks.append(("transpose-symmetry", sym, ""))

    cost = TOTAL_ENTROPY if graph.n > 1 else COST_FUNCTIONS["additive-scalar"]
    if len(graph.nodes) <= oracle_nodes:
        worst = 0.0
        mismatch = 0
        for s in graph.nodes:
            res = solver.shortest_paths_from(graph, s, solver.SolverConfig(cost=cost))
            for t, p in res.best_paths.items():
                o = solver.brute_force_oracle(graph, s, t, cost)
                worst = max(worst, abs(o.cost - p.cost))
                mismatch += o.nodes != p.nodes
        checks.append(("oracle-equivalence", worst <= 1e-9 and mismatch == 0, f"max diff {worst:.3g}, {mismatch} path mismatches"))
    if len(graph.nodes) <= metric_nodes and graph.n > 1:
        ap = solver.all_pairs(graph, solver.SolverConfig(cost=cost))
        names = graph.nodes
        diag = max(ap[x, x].cost for x in names)
        asym = max(abs(ap[x, y].cost - ap[y, x].cost) for x in names for y in names)
        neg = min(ap[x, y].cost for x in names for y in names)
        tri = max(
            ap[x, z].cost - total_entropy(compose(ap[x, y].composed, ap[y, z].composed))
            for x, y, z in permutations(names, 3)
        ) if len(names) >= 3 else -1.0
        checks.append(("metric-identity", diag <= 1e-12, f"max diagonal {diag:.3g}"))
        checks.append(("metric-symmetry", asym <= 1e-9, f"max asymmetry {asym:.3g}"))
        checks.append(("metric-non-negativity", neg >= 0, f"min {neg:.3g}"))
        checks.append(("metric-triangle", tri <= 1e-9, f"max violation {tri:.3g}"))
    return checks


def cmd_validate(args):
    graph = _load_graph(args.graph)
    checks = validate_graph(graph, samples=args.samples, seed=args.seed)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    return 0 if all(ok for _, ok, _ in checks) else 2


# -- parser --------------------------------------------------------------


def _positive(v):
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return i


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--threads", type=_positive, default=1, help="worker threads (results do not depend on it)")

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--k-max", type=_positive, default=None, help="maximum number of edges per path")
    solve.add_argument("--cost", choices=sorted(COST_FUNCTIONS), default="total-entropy", help="path cost function")

    ap = argparse.ArgumentParser(prog="matpath", description="Shortest paths in graphs with matrix-valued edges.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", parents=[common], help="build a multi-matching graph from meshes")
    p.add_argument("inputs", nargs="+", help="OFF/OBJ files or directories containing them")
    p.add_argument("-o", "--output", help="graph JSON output (default: stdout)")
    p.add_argument("--features", help="directory with <shape>.csv per-vertex feature files")
    p.add_argument("--no-builtin-descriptor", action="store_true", help="require feature files for every shape")
    p.add_argument("--config", help="builder config JSON (flags override it)")
    p.add_argument("--preset", choices=sorted(builder.PRESETS), help="dataset parameter preset")
    p.add_argument("-n", type=_positive, help="clusters per shape (default 28)")
    p.add_argument("-p", type=_positive, help="number of percentiles")
    p.add_argument("--sigma", type=float, help="Gaussian kernel bandwidth")
    p.add_argument("--sinkhorn-tol", type=float, help="Sinkhorn marginal tolerance (default 1e-8)")
    p.add_argument("--sinkhorn-max-iter", type=_positive, help="Sinkhorn iteration cap (default 10000)")
    p.add_argument("--restarts", type=_positive, help="k-means restarts (default 10)")
    p.add_argument("--bins", type=_positive, help="built-in descriptor bins (default 32)")
    p.add_argument("--emit-config", help="write the effective builder config JSON here")
    p.add_argument("--print-distances", action="store_true", help="print cluster distance quantiles (to pick sigma)")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("shortest-path", parents=[common, solve], help="shortest path between two nodes")
    p.add_argument("graph")
    p.add_argument("source")
    p.add_argument("target")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fixed-k", type=_positive, help="paths with exactly K edges")
    g.add_argument("--certify", action="store_true", help="run to natural termination (ignores --k-max)")
    g.add_argument("--brute-force", action="store_true", help="exhaustive enumeration (small graphs)")
    p.add_argument("--json", action="store_true", help="print the JSON result document")
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON stats")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_shortest_path)

    p = sub.add_parser("all-pairs", parents=[common, solve], help="distance table over all node pairs")
    p.add_argument("graph")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_all_pairs)

    p = sub.add_parser("retrieve", parents=[common, solve], help="nearest-neighbour retrieval evaluation")
    p.add_argument("--graph")
    p.add_argument("--table", help="precomputed distance table JSON (any method)")
    p.add_argument("--labels", required=True, help="node -> family label (JSON object or CSV node,label)")
    p.add_argument("-o", "--output", required=True, help="CSV with columns k,mean_g,std_g")
    p.add_argument("--long", help="per-query CSV with columns query,k,g")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("intermediate", parents=[common, solve], help="intermediate shapes between two nodes")
    p.add_argument("graph")
    p.add_argument("source")
    p.add_argument("target")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fixed-k", type=_positive, help="exactly K edges (K-1 intermediates)")
    g.add_argument("--unrestricted", action="store_true", help="globally shortest path")
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_intermediate)

    p = sub.add_parser("morph", parents=[common, solve], help="piecewise linear morph along the shortest path")
    p.add_argument("graph")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--meshes", required=True, help="directory with <node>.off/.obj sharing one topology")
    p.add_argument("--fixed-k", type=_positive)
    p.add_argument("--placements", help="comma-separated keyframe times, e.g. 0,0.8,1")
    p.add_argument("--frames", type=_positive, default=100)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_morph)

    p = sub.add_parser("bench", parents=[common], help="SP/CERT all-pairs timing report")
    p.add_argument("graphs", nargs="*")
    p.add_argument("--random", type=_positive, help="also bench a random graph with this many nodes")
    p.add_argument("--dim", type=_positive, default=28, help="edge matrix size of the random graph")
    p.add_argument("--modes", default="sp,cert", help="comma-separated subset of sp,cert")
    p.add_argument("--k-max", type=_positive, default=3, help="edge cap in SP mode (default 3)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", parents=[common], help="run the invariant and oracle suite on a graph")
    p.add_argument("graph")
    p.add_argument("--samples", type=_positive, default=1000)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MatPathError as exc:
        msg = " ".join(str(exc).split())
        print(f"matpath: error[{exc.code}]: {msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"matpath: error[io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
