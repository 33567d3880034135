"""Command-line harness: instance generation, builds, streaming, evaluation.

Exit codes: 0 success, 2 bad configuration, 3 algorithmic failure (a build
aborted), 4 I/O trouble.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import BuildFailure, ConfigError, ValidationError
from .graph import (Graph, EdgeUpdate, generate_planted, read_graph,
                    total_weight, write_graph_json, write_graph_text)
from .hctree import HCTree
from .objectives import dasgupta_cost, mw_revenue
from .oracle import ADVERSARIES, OracleConfig, SplittingOracle
from .partial import SplitParams
from .pipeline import (brute_force_opt, hc_das, hc_das_fast, hc_mw,
                       stream_feed, stream_finalize, stream_init, stream_memory)
from .ptree import check_strong_consistency, check_weak_consistency
from .sparsest import DEFAULT_EXACT_LIMIT, recursive_sparsest_tree

CSV_COLUMNS = ["n", "seed", "p", "adversary", "algo", "objective", "value",
               "opt_proxy", "ratio", "queries", "depth", "wall_ms", "mem_bits"]

NOISE_SWEEP = (1.0, 0.95, 0.9, 0.8, 0.75)


def _parse_seeds(text):
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",")]


def _resolve_params(args, n) -> SplitParams:
    overrides = {}
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.eps is not None:
        overrides["eps"] = args.eps
    if getattr(args, "exact_counters", False):
        overrides["exact_counters"] = True
    preset = SplitParams.desk if args.preset == "desk" else SplitParams.paper
    return preset(n, seed=args.seed_value, **overrides)


def _workers() -> int:
    return max(1, int(os.environ.get("SPLITHC_WORKERS", "1")))


def cmd_generate(args):
    inst = generate_planted(args.n, args.seed, shape=args.shape, jitter=args.jitter)
    if args.format == "json":
        write_graph_json(inst.graph, args.out_graph)
    else:
        write_graph_text(inst.graph, args.out_graph)
    with open(args.out_tree, "w", encoding="utf-8") as f:
        f.write(inst.planted_tree.to_json())
    print(f"wrote {args.out_graph} ({inst.graph.n} vertices, {inst.graph.m} edges) "
          f"and {args.out_tree}")
    return 0


def _oracle_config(args, planted, seed) -> OracleConfig:
    alt = None
    if args.adversary == "alt_tree":
        path = getattr(args, "alt_tree", None)
        if not path:
            raise ConfigError("alt_tree adversary needs --alt-tree FILE")
        alt = HCTree.from_json(open(path, encoding="utf-8").read())
    return OracleConfig(p=args.p, adversary=args.adversary, seed=seed, alt_tree=alt)


def _one_build(g, planted, seed, args):
    params = SplitParams(**{**_resolve_params_dict(args, g.n), "seed": seed})
    cfg = _oracle_config(args, planted, seed)
    oracle = SplittingOracle(planted, cfg, track_distinct=False)
    t0 = time.perf_counter()
    if args.algo == "hc-das":
        tree, partial, trace = hc_das(g, oracle, params, exact_limit=args.exact_limit)
        check = check_strong_consistency(partial, planted)
        objective = "das"
    elif args.algo == "hc-das-fast":
        tree, partial, trace = hc_das_fast(g, oracle, params, exact_limit=args.exact_limit)
        check = check_strong_consistency(partial, planted)
        objective = "das"
    elif args.algo == "hc-mw":
        tree, partial, trace = hc_mw(g, oracle, params)
        check = check_weak_consistency(partial, planted)
        objective = "mw"
    else:
        raise ConfigError(f"unknown algo {args.algo!r}")
    wall = (time.perf_counter() - t0) * 1e3
    if objective == "das":
        value = dasgupta_cost(g, tree).value
        proxy = dasgupta_cost(g, planted).value
        ratio = value / proxy if proxy > 0 else 1.0
    else:
        value = mw_revenue(g, tree).value
        proxy = mw_revenue(g, planted).value
        ratio = value / proxy if proxy > 0 else 1.0
    row = {"n": g.n, "seed": seed, "p": args.p, "adversary": args.adversary,
           "algo": args.algo, "objective": objective, "value": value,
           "opt_proxy": proxy, "ratio": ratio, "queries": oracle.total_queries,
           "depth": trace.max_depth, "wall_ms": round(wall, 3), "mem_bits": ""}
    return tree, trace, row, check


def _resolve_params_dict(args, n):
    p = _resolve_params(args, n)
    return {f: getattr(p, f) for f in ("tau", "sample_strong", "sample_split",
                                       "sample_orphan", "eps", "exact_counters", "seed")}


def cmd_build(args):
    g = read_graph(args.graph)
    planted = HCTree.from_json(open(args.tree, encoding="utf-8").read())
    if args.algo in ("hc-das", "hc-das-fast"):
        params = _resolve_params(args, g.n)
        if params.tau > args.exact_limit:
            raise ConfigError(f"tau={params.tau} above exact-cut limit {args.exact_limit}")
    seeds = _parse_seeds(args.seed)
    rows = {}
    failures = []

    def run(seed):
        try:
            tree, trace, row, check = _one_build(g, planted, seed, args)
            row["consistency"] = "pass" if check.ok else "fail"
            rows[seed] = (tree, trace, row)
        except BuildFailure as exc:
            failures.append((seed, exc))

    workers = _workers()
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, seeds))
    else:
        for s in seeds:
            run(s)

    if args.out_csv:
        with open(args.out_csv, "w", newline="", encoding="utf-8") as f:
            wr = csv.DictWriter(f, fieldnames=CSV_COLUMNS + ["consistency"])
            wr.writeheader()
            for s in sorted(rows):
                wr.writerow(rows[s][2])
    for s in sorted(rows):
        tree, trace, row = rows[s]
        if args.out_tree:
            path = args.out_tree if len(seeds) == 1 else f"{args.out_tree}.{s}"
            with open(path, "w", encoding="utf-8") as f:
                f.write(tree.to_json())
        if args.out_trace:
            path = args.out_trace if len(seeds) == 1 else f"{args.out_trace}.{s}"
            with open(path, "w", encoding="utf-8") as f:
                f.write(trace.to_jsonl())
        print(f"seed {s}: value={row['value']:.6g} ratio={row['ratio']:.4f} "
              f"queries={row['queries']} consistency={row['consistency']}")
    for s, exc in failures:
        print(f"seed {s}: FAIL {exc}", file=sys.stderr)
    return 3 if failures else 0


def _read_stream_file(path):
    updates = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            kind = "insert" if parts[0] == "+" else "delete"
            updates.append(EdgeUpdate(kind, int(parts[1]), int(parts[2]), float(parts[3])))
    return updates


def cmd_stream(args):
    planted = HCTree.from_json(open(args.tree, encoding="utf-8").read())
    n = planted.n_leaves
    params = _resolve_params(args, n)
    cfg = _oracle_config(args, planted, args.seed_value)
    oracle = SplittingOracle(planted, cfg, track_distinct=False)
    st = stream_init(n, oracle, params, exact_limit=args.exact_limit)
    updates = _read_stream_file(args.stream) if args.stream else []
    for upd in updates:
        stream_feed(st, upd)
    tree = stream_finalize(st)
    mem = stream_memory(st)
    if args.out_tree:
        with open(args.out_tree, "w", encoding="utf-8") as f:
            f.write(tree.to_json())
    print(json.dumps(mem))
    if args.check_offline:
        if not args.graph:
            raise ConfigError("--check-offline needs --graph")
        g = read_graph(args.graph)
        oracle2 = SplittingOracle(planted, cfg, track_distinct=False)
        off, _, _ = hc_das(g, oracle2, params, exact_limit=args.exact_limit)
        same = tree.structurally_equal(off)
        print(f"offline-equal: {same}")
        if not same:
            return 3
    return 0


def cmd_eval(args):
    g = read_graph(args.graph)
    tree = HCTree.from_json(open(args.tree, encoding="utf-8").read())
    cost = dasgupta_cost(g, tree).value
    rev = mw_revenue(g, tree).value
    out = {"n": g.n, "cost": cost, "revenue": rev,
           "identity_gap": abs(cost + rev - g.n * total_weight(g))}
    if args.planted:
        planted = HCTree.from_json(open(args.planted, encoding="utf-8").read())
        out["cost_ratio_vs_planted"] = cost / dasgupta_cost(g, planted).value
        out["rev_ratio_vs_planted"] = rev / mw_revenue(g, planted).value
    print(json.dumps(out))
    return 0


def cmd_bench(args):
    seeds = _parse_seeds(args.seed)
    ps = [float(x) for x in args.p_sweep.split(",")] if args.p_sweep else list(NOISE_SWEEP)
    rows = []
    for seed in seeds:
        inst = generate_planted(args.n, seed, shape=args.shape)
        g, planted = inst.graph, inst.planted_tree
        proxy_cost = dasgupta_cost(g, planted).value
        proxy_rev = mw_revenue(g, planted).value
        if args.n <= 10:
            proxy_cost = brute_force_opt(g, "das").best_value
            proxy_rev = brute_force_opt(g, "mw").best_value
        if "recursive-sparsest" in args.algos:
            t0 = time.perf_counter()
            tree = recursive_sparsest_tree(g)
            wall = (time.perf_counter() - t0) * 1e3
            value = dasgupta_cost(g, tree).value
            rows.append({"n": args.n, "seed": seed, "p": "", "adversary": "",
                         "algo": "recursive-sparsest", "objective": "das",
                         "value": value, "opt_proxy": proxy_cost,
                         "ratio": value / proxy_cost if proxy_cost else 1.0,
                         "queries": 0, "depth": "", "wall_ms": round(wall, 3),
                         "mem_bits": ""})
        for p in ps:
            for algo in args.algos:
                if algo == "recursive-sparsest":
                    continue
                ns = argparse.Namespace(**vars(args))
                ns.p = p
                ns.algo = algo
                ns.adversary = args.adversary
                try:
                    _, _, row, check = _one_build(g, planted, seed, ns)
                    row["consistency"] = "pass" if check.ok else "fail"
                    rows.append(row)
                except BuildFailure as exc:
                    rows.append({"n": args.n, "seed": seed, "p": p,
                                 "adversary": args.adversary, "algo": algo,
                                 "objective": "", "value": "", "opt_proxy": "",
                                 "ratio": "", "queries": "", "depth": "",
                                 "wall_ms": "", "mem_bits": "", "consistency": f"FAIL:{exc}"})
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        wr = csv.DictWriter(f, fieldnames=CSV_COLUMNS + ["consistency"],
                            extrasaction="ignore")
        wr.writeheader()
        for r in rows:
            wr.writerow(r)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _add_oracle_flags(sp):
    sp.add_argument("--p", type=float, default=0.9)
    sp.add_argument("--adversary", choices=ADVERSARIES, default="random_wrong")
    sp.add_argument("--alt-tree", dest="alt_tree", default=None,
                    help="tree file for the alt_tree adversary")
    sp.add_argument("--preset", choices=["desk", "paper"], default="desk")
    sp.add_argument("--tau", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--exact-counters", action="store_true", dest="exact_counters")
    sp.add_argument("--exact-limit", type=int, default=DEFAULT_EXACT_LIMIT)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="splithc")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a planted instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--shape", choices=["random", "balanced", "caterpillar"], default="random")
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--format", choices=["text", "json"], default="text")
    g.add_argument("--out-graph", default="instance.graph")
    g.add_argument("--out-tree", default="instance.tree.json")
    g.set_defaults(fn=cmd_generate)

    b = sub.add_parser("build", help="run a clustering pipeline")
    b.add_argument("--graph", required=True)
    b.add_argument("--tree", required=True, help="planted tree file (oracle ground truth)")
    b.add_argument("--algo", choices=["hc-das", "hc-das-fast", "hc-mw"], required=True)
    b.add_argument("--seed", default="0", help="single seed, list, or range a..b")
    _add_oracle_flags(b)
    b.add_argument("--out-tree", default=None)
    b.add_argument("--out-trace", default=None)
    b.add_argument("--out-csv", default=None)
    b.set_defaults(fn=cmd_build)

    s = sub.add_parser("stream", help="replay a dynamic edge stream")
    s.add_argument("--tree", required=True)
    s.add_argument("--stream", default=None, help="file of '+ u v w' / '- u v w' lines")
    s.add_argument("--graph", default=None)
    s.add_argument("--seed", dest="seed", default="0")
    _add_oracle_flags(s)
    s.add_argument("--out-tree", default=None)
    s.add_argument("--check-offline", action="store_true")
    s.set_defaults(fn=cmd_stream)

    e = sub.add_parser("eval", help="evaluate a tree against a graph")
    e.add_argument("--graph", required=True)
    e.add_argument("--tree", required=True)
    e.add_argument("--planted", default=None)
    e.set_defaults(fn=cmd_eval)

    bench = sub.add_parser("bench", help="noise sweeps and baselines")
    bench.add_argument("--n", type=int, required=True)
    bench.add_argument("--seed", default="0")
    bench.add_argument("--shape", choices=["random", "balanced", "caterpillar"], default="random")
    bench.add_argument("--algos", nargs="+",
                       default=["hc-das", "hc-mw", "recursive-sparsest"])
    bench.add_argument("--p-sweep", default=None, help="comma list, default standard sweep")
    bench.add_argument("--adversary", choices=ADVERSARIES, default="random_wrong")
    bench.add_argument("--preset", choices=["desk", "paper"], default="desk")
    bench.add_argument("--tau", type=int, default=None)
    bench.add_argument("--eps", type=float, default=None)
    bench.add_argument("--exact-counters", action="store_true", dest="exact_counters")
    bench.add_argument("--exact-limit", type=int, default=DEFAULT_EXACT_LIMIT)
    bench.add_argument("--out", default="bench.csv")
    bench.set_defaults(fn=cmd_bench)

    args = ap.parse_args(argv)
    if hasattr(args, "seed") and isinstance(args.seed, str):
        args.seed_value = _parse_seeds(args.seed)[0]
    elif hasattr(args, "seed"):
        args.seed_value = int(args.seed)
    try:
        return args.fn(args)
    except (ConfigError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BuildFailure as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
