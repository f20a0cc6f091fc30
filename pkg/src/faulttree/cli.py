"""Command-line entry point: ``python -m faulttree <subcommand> ...``.

Every subcommand writes JSON or CSV to ``--out`` (stdout when omitted) and,
next to a file output, a ``<out>.manifest.json`` with the full config and
library versions.  Exit codes: 2 config error, 3 infeasible search,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import warnings
from importlib import metadata

import numpy as np

from .boolean_tree import (ComplexityParams, EvalTree, TreeError, analysis_for, annotate,
                           complexity_bound, query_estimate, random_k_fault_tree)
from .classical_solver import rows_to_csv, run_benchmark
from .hard_distribution import DistributionError, GadgetSearchError, HardDistSpec, sample_hard_tree
from .nand_walk import (ResonanceError, WalkError, build_walk_graph, gap_scan,
                        hamiltonian_spectrum, propagate_first_order, verify_complexity_rules)
from .span_program import DirectFunctionSpec, SpanProgramError

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4
EXPLICIT_LEAF_LIMIT = 2**20


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- helpers


def _function(args) -> DirectFunctionSpec:
    kind = args.kind
    if kind == "nand":
        return DirectFunctionSpec.nand()
    if kind == "majority":
        return DirectFunctionSpec.majority(args.arity or 3)
    if args.arity is None:
        raise ConfigError(f"--arity is required for --kind {kind}")
    if kind == "custom":
        if not args.table or set(args.table) - {"0", "1"}:
            raise ConfigError("--kind custom needs --table, a string of 2**arity bits")
        return DirectFunctionSpec(args.arity, "custom", truth_table=tuple(int(b) for b in args.table))
    if args.h is None:
        raise ConfigError(f"--h is required for --kind {kind}")
    return DirectFunctionSpec(args.arity, kind, h=args.h)


def _load_tree(path: str) -> tuple[EvalTree, dict]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"tree file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"tree file is not JSON: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("tree"), dict):
        # output of `sample --explicit`
        function = data.get("spec", {}).get("function")
        data = {**data["tree"], "function": function} if function else data["tree"]
    return EvalTree.from_dict(data), data


def _tree_function(args, data: dict) -> DirectFunctionSpec:
    if "function" in data:
        return DirectFunctionSpec.from_dict(data["function"])
    return _function(args)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from exc


def _versions() -> dict:
    import scipy

    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"artifact": own, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
        return
    with open(args.out, "w") as fh:
        fh.write(text)
    config = {k: v for k, v in sorted(vars(args).items()) if k != "handler"}
    manifest = {"config": config, "seed": args.seed, "versions": _versions(), "output": args.out}
    with open(args.out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# --------------------------------------------------------------------------- subcommands


def cmd_analyze_fn(args) -> None:
    spec = _function(args)
    out = analysis_for(spec).to_dict()
    out["function"] = spec.to_dict()
    _emit(args, _json(out))


def cmd_annotate(args) -> None:
    tree, data = _load_tree(args.tree)
    spec = _tree_function(args, data)
    ann = annotate(analysis_for(spec), tree)
    out = ann.to_dict()
    out["kappa_max"] = int(ann.kappa.max())
    if args.k is not None:
        out["k"] = args.k
        out["k_fault"] = bool(ann.kappa.max() <= args.k)
    _emit(args, _json(out))


def cmd_complexity(args) -> None:
    tree, data = _load_tree(args.tree)
    spec = _tree_function(args, data)
    analysis = analysis_for(spec)
    ann = annotate(analysis, tree)
    k = int(ann.kappa.max()) if args.k is None else args.k
    estimate = query_estimate(tree.depth, k, analysis.omega,
                              ComplexityParams(args.c1, args.c2, args.c_energy, args.c_prime))
    params = ComplexityParams(args.c1, args.c2, args.induction_energy, args.c_prime)
    rep = complexity_bound(analysis, ann, params, k=k, weighted=args.weighted)
    out = {"n": tree.depth, "k": k, "omega": analysis.omega, "c_energy": args.c_energy,
           "query_estimate": estimate, "induction": rep.to_dict(),
           "induction_params": {"c1": params.c1, "c2": params.c2, "c_energy": params.c_energy,
                                "c_prime": params.c_prime},
           "induction_holds": bool(rep.violations.size == 0)}
    _emit(args, _json(out))


def cmd_sample(args) -> None:
    spec = HardDistSpec(_function(args), args.n, args.k)
    oracle = sample_hard_tree(spec, args.seed, args.forced_root)
    out = {"spec": spec.to_dict(), "seed": args.seed, "forced_root": args.forced_root,
           "root_value": oracle.root_value, "top_category": oracle.category(())}
    if args.explicit:
        if spec.arity**spec.height > EXPLICIT_LEAF_LIMIT:
            raise ConfigError(f"{spec.arity}**{spec.height} leaves is too many for --explicit")
        tree = oracle.tree()
        out["tree"] = tree.to_dict()
        out["tree"]["function"] = spec.function.to_dict()
    _emit(args, _json(out))


def _budget(text, spec: HardDistSpec):
    if text in ("auto", "none", None):
        return None if text in ("none", None) else (4 * math.ceil(math.log2(spec.n_tilde))) ** spec.k
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"budget must be an integer, 'auto' or 'none', got {text!r}") from exc


def _grid_from_json(path: str, default_fn: DirectFunctionSpec) -> list:
    """``{"function": {...}, "cells": [{"n": .., "k": .., "algorithm": .., "budget": ..}]}``."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read grid {path}: {exc}") from exc
    fn = DirectFunctionSpec.from_dict(data["function"]) if "function" in data else default_fn
    grid = []
    for cell in data.get("cells", []):
        spec = HardDistSpec(fn, int(cell["n"]), int(cell.get("k", 1)))
        budget = cell.get("budget")
        grid.append((spec, cell["algorithm"], _budget(budget if isinstance(budget, str) or budget is None
                                                      else str(budget), spec)))
    return grid


def cmd_bench(args) -> None:
    spec_fn = _function(args)
    if args.grid:
        grid = _grid_from_json(args.grid, spec_fn)
    else:
        grid = []
        for n in _int_list(args.n):
            for k in _int_list(args.k):
                spec = HardDistSpec(spec_fn, n, k)
                for algorithm in args.algorithms.split(","):
                    for b in args.budgets.split(","):
                        grid.append((spec, algorithm, _budget(b, spec)))
    for spec, algorithm, budget in grid:
        if algorithm not in ("shortcircuit", "splitsearch"):
            raise ConfigError(f"unknown algorithm {algorithm!r}")
        if algorithm == "splitsearch" and budget is None:
            raise ConfigError("splitsearch needs a finite budget")
    if not grid:
        raise ConfigError("benchmark grid is empty")
    rows = run_benchmark(grid, args.trials, args.seed, args.jobs)
    _emit(args, rows_to_csv(rows))


def cmd_walk_spectrum(args) -> None:
    if args.gap_scan:
        rows = gap_scan(_int_list(args.depths), _int_list(args.ks), args.samples, args.seed,
                        args.p_fault, args.jobs)
        keys = ["depth", "k", "sample", "kappa", "root", "gap", "scaled", "residual"]
        lines = [",".join(keys)]
        lines += [",".join(f"{r[key]:.17g}" if isinstance(r[key], float) else str(r[key]) for key in keys)
                  for r in rows]
        _emit(args, "\n".join(lines))
        return
    if args.tree:
        tree, _ = _load_tree(args.tree)
    else:
        if args.depth is None:
            raise ConfigError("give --tree, --depth or --gap-scan")
        rng = np.random.default_rng(args.seed)
        tree = random_k_fault_tree(analysis_for(DirectFunctionSpec.nand()), args.depth, args.k, rng,
                                   p_fault=args.p_fault)
    graph = build_walk_graph(tree)
    if args.edgelist:
        with open(args.edgelist, "w") as fh:
            fh.write(graph.to_edgelist())
    _emit(args, hamiltonian_spectrum(graph).to_csv())


def cmd_propagate(args) -> None:
    tree, _ = _load_tree(args.tree)
    if args.first_order:
        comp = propagate_first_order(tree, args.a_leaf, args.b_leaf)
        out = {"first_order": True, "complexity": comp.tolist(), "root_complexity": float(comp[0])}
    else:
        rep = verify_complexity_rules(tree, args.energy, args.a_leaf, args.b_leaf)
        out = rep.to_dict()
        out.update(rep.state.to_dict())
    _emit(args, _json(out))


# --------------------------------------------------------------------------- parser


def _add_function(p, default="nand"):
    p.add_argument("--kind", default=default,
                   choices=["nand", "majority", "threshold", "negated_threshold", "custom"])
    p.add_argument("--arity", type=int)
    p.add_argument("--h", type=int, help="threshold for threshold kinds")
    p.add_argument("--table", help="truth table bits, input 0 most significant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faulttree", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-fn", parents=[common], help="span program and witness-size table")
    _add_function(p)
    p.set_defaults(handler=cmd_analyze_fn)

    p = sub.add_parser("annotate", parents=[common], help="kappa / fault report for a JSON tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--k", type=int)
    _add_function(p)
    p.set_defaults(handler=cmd_annotate)

    p = sub.add_parser("complexity", parents=[common], help="complexity recursion and query estimate")
    p.add_argument("--tree", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--c-prime", type=float, default=2.0)
    p.add_argument("--c-energy", type=float, default=1.0, help="energy constant of the query estimate")
    p.add_argument("--induction-energy", type=float, default=None,
                   help="energy constant of the recursion (default: small enough for the induction)")
    p.add_argument("--weighted", action="store_true")
    _add_function(p)
    p.set_defaults(handler=cmd_complexity)

    p = sub.add_parser("sample", parents=[common], help="seed (or expand) a hard-distribution tree")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--forced-root", type=int, choices=[0, 1])
    p.add_argument("--explicit", action="store_true", help="include all leaves")
    _add_function(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("bench-classical", parents=[common], help="classical success curves as CSV")
    p.add_argument("--n", default="64", help="comma-separated block heights")
    p.add_argument("--k", default="1", help="comma-separated level counts")
    p.add_argument("--algorithms", default="shortcircuit,splitsearch")
    p.add_argument("--budgets", default="1,auto", help="integers, 'auto' ((4*ceil(log2 n~))^k) or 'none'")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--grid", help="JSON grid config (overrides --n/--k/--algorithms/--budgets)")
    _add_function(p)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("walk-spectrum", parents=[common], help="walk Hamiltonian spectrum as CSV")
    p.add_argument("--tree")
    p.add_argument("--depth", type=int)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--p-fault", type=float, default=0.5)
    p.add_argument("--edgelist", help="also write the graph as an edge list")
    p.add_argument("--gap-scan", action="store_true", help="gap table over --depths x --ks")
    p.add_argument("--depths", default="2,3,4,5,6,7,8")
    p.add_argument("--ks", default="0,1,2,3")
    p.add_argument("--samples", type=int, default=3)
    p.set_defaults(handler=cmd_walk_spectrum)

    p = sub.add_parser("propagate", parents=[common], help="ratio recursion report for a NAND tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--energy", type=float, default=1e-6)
    p.add_argument("--a-leaf", type=float, default=1.0)
    p.add_argument("--b-leaf", type=float, default=1.0)
    p.add_argument("--first-order", action="store_true", help="idealized gate rules instead")
    p.set_defaults(handler=cmd_propagate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.handler(args)
    except GadgetSearchError as exc:
        print(f"error: infeasible search: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ResonanceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, SpanProgramError, TreeError, DistributionError, WalkError, KeyError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
