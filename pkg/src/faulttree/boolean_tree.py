"""Complete c-ary evaluation trees, fault annotation and complexity bounds.

Nodes are stored breadth first: node ``d`` has children ``d*c + j + 1``, so
level ``l`` occupies indices ``[(c**l - 1)/(c - 1), (c**(l+1) - 1)/(c - 1))``.
Leaves are the last ``c**depth`` entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .span_program import (DirectFunctionSpec, FunctionAnalysis, SpanProgramError,
                           build_program, normalize_trivial, witness_size)


class TreeError(ValueError):
    pass


def level_offset(c: int, level: int) -> int:
    return (c**level - 1) // (c - 1)


def node_count(c: int, depth: int) -> int:
    return level_offset(c, depth + 1)


class EvalTree:
    """Complete c-ary tree of a given depth with explicit or lazy leaves."""

    def __init__(self, arity: int, depth: int, leaves=None, oracle=None):
        if arity < 2 or depth < 0:
            raise TreeError("need arity >= 2 and depth >= 0")
        if (leaves is None) == (oracle is None):
            raise TreeError("give exactly one of leaves or oracle")
        self.arity = arity
        self.depth = depth
        self.oracle = oracle
        self._values = None
        if leaves is not None:
            leaves = np.asarray(leaves, dtype=np.int8).ravel()
            if leaves.shape != (arity**depth,):
                raise TreeError(f"expected {arity**depth} leaves, got {leaves.size}")
            if np.any((leaves != 0) & (leaves != 1)):
                raise TreeError("leaves must be bits")
            self._leaves = leaves
        else:
            if oracle.arity != arity or oracle.height != depth:
                raise TreeError("oracle shape does not match tree")
            self._leaves = None

    @property
    def leaves(self) -> np.ndarray:
        if self._leaves is None:
            self._leaves = self.oracle.materialize()
        return self._leaves

    def leaf_value(self, index: int) -> int:
        if self._leaves is not None:
            return int(self._leaves[index])
        return self.oracle.query(leaf_path(index, self.arity, self.depth))

    def to_dict(self) -> dict:
        return {"arity": self.arity, "depth": self.depth, "leaves": self.leaves.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "EvalTree":
        if "leaves" not in data:
            raise TreeError("explicit tree JSON needs a 'leaves' array")
        return cls(int(data["arity"]), int(data["depth"]), data["leaves"])


class LeafOracle:
    """Memoized, query-counted oracle over explicit leaves."""

    def __init__(self, arity: int, leaves):
        self.arity = arity
        self._all = np.asarray(leaves, dtype=np.int8).ravel()
        depth = 0
        while arity**depth < self._all.size:
            depth += 1
        if arity**depth != self._all.size:
            raise TreeError("leaf count is not a power of the arity")
        self.height = depth
        self._seen: dict = {}
        self.transcript: list = []

    @property
    def queries(self) -> int:
        return len(self._seen)

    def query(self, path) -> int:
        path = tuple(int(d) for d in path)
        if len(path) != self.height or any(not 0 <= d < self.arity for d in path):
            raise TreeError("malformed leaf path")
        if path not in self._seen:
            self._seen[path] = int(self._all[path_index(path, self.arity)])
            self.transcript.append((path, self._seen[path], len(self._seen)))
        return self._seen[path]

    def is_known(self, path) -> bool:
        return tuple(path) in self._seen

    def materialize(self) -> np.ndarray:
        return self._all.copy()


def leaf_path(index: int, c: int, depth: int) -> tuple[int, ...]:
    digits = []
    for _ in range(depth):
        index, d = divmod(index, c)
        digits.append(d)
    return tuple(reversed(digits))


def path_index(path, c: int) -> int:
    index = 0
    for d in path:
        index = index * c + int(d)
    return index


def _function_table(spec_or_analysis) -> np.ndarray:
    if isinstance(spec_or_analysis, FunctionAnalysis):
        return spec_or_analysis.values
    return spec_or_analysis.table()


def _parent_codes(child_values: np.ndarray, c: int) -> np.ndarray:
    groups = child_values.reshape(-1, c).astype(np.int64)
    weights = 1 << np.arange(c - 1, -1, -1)
    return groups @ weights


def node_values(spec, tree: EvalTree) -> np.ndarray:
    """All node values, breadth-first."""
    if tree._values is not None:
        return tree._values
    c = spec.arity
    if c != tree.arity:
        raise TreeError(f"function arity {c} does not match tree arity {tree.arity}")
    table = _function_table(spec)
    levels = [tree.leaves]
    for _ in range(tree.depth):
        levels.append(table[_parent_codes(levels[-1], c)].astype(np.int8))
    tree._values = np.concatenate(levels[::-1])
    return tree._values


def eval_tree(spec, tree: EvalTree) -> int:
    if spec.arity != tree.arity:
        raise TreeError(f"function arity {spec.arity} does not match tree arity {tree.arity}")
    if tree.oracle is not None and tree._leaves is None:
        return _eval_lazy(spec, tree, ())
    return int(node_values(spec, tree)[0])


def _eval_lazy(spec, tree, prefix):
    if len(prefix) == tree.depth:
        return tree.oracle.query(prefix)
    bits = [_eval_lazy(spec, tree, prefix + (j,)) for j in range(tree.arity)]
    return spec.evaluate(bits) if isinstance(spec, DirectFunctionSpec) else int(
        spec.values[_parent_codes(np.array(bits), tree.arity)[0]])


@dataclass(frozen=True)
class TreeAnnotation:
    """Per-node arrays, breadth-first; leaf entries of ``trivial``/``strong`` are padding."""

    arity: int
    depth: int
    values: np.ndarray
    inputs: np.ndarray
    trivial: np.ndarray
    strong: np.ndarray
    kappa: np.ndarray

    def heights(self) -> np.ndarray:
        c = self.arity
        return np.concatenate([np.full(c**lvl, self.depth - lvl) for lvl in range(self.depth + 1)])

    def to_dict(self) -> dict:
        return {"arity": self.arity, "depth": self.depth, "values": self.values.tolist(),
                "trivial": self.trivial.tolist(), "kappa": self.kappa.tolist(),
                "strong": self.strong.astype(int).tolist()}


def annotate(analysis: FunctionAnalysis, tree: EvalTree) -> TreeAnnotation:
    c = tree.arity
    if analysis.arity != c:
        raise TreeError("analysis and tree have different arity")
    values = node_values(analysis, tree)
    total = values.size
    n_internal = total - c**tree.depth
    inputs = np.full(total, -1, dtype=np.int64)
    trivial = np.ones(total, dtype=bool)
    strong = np.zeros((total, c), dtype=bool)
    kappa = np.zeros(total, dtype=np.int64)
    for lvl in range(tree.depth - 1, -1, -1):
        lo, hi = level_offset(c, lvl), level_offset(c, lvl + 1)
        child_lo = hi
        child_vals = values[child_lo:child_lo + (hi - lo) * c]
        codes = _parent_codes(child_vals, c)
        inputs[lo:hi] = codes
        trivial[lo:hi] = analysis.trivial[codes]
        st = analysis.strong[codes]
        strong[lo:hi] = st
        if not np.all(st.any(axis=1)):
            raise TreeError("node without strong children: classification table is not direct")
        child_k = kappa[child_lo:child_lo + (hi - lo) * c].reshape(-1, c)
        best = np.where(st, child_k, -1).max(axis=1)
        kappa[lo:hi] = best + (~trivial[lo:hi]).astype(np.int64)
    trivial[n_internal:] = True
    return TreeAnnotation(c, tree.depth, values, inputs, trivial, strong, kappa)


def validate_k_fault(annotation: TreeAnnotation, k: int) -> bool:
    return bool(annotation.kappa.max() <= k)


@dataclass(frozen=True)
class ComplexityParams:
    c1: float = 1.0
    c2: float = 1.0
    c_energy: float | None = None
    c_prime: float = 2.0

    def __post_init__(self):
        if self.c_energy is None:
            default = 0.01 * min(1.0, 1.0 / (self.c2 * self.c_prime)) if self.c2 > 0 else 0.01
            object.__setattr__(self, "c_energy", default)
        if self.c1 < 0 or self.c2 < 0:
            raise TreeError("c1 and c2 must be nonnegative")
        if self.c_energy <= 0:
            raise TreeError("c_energy must be positive")
        if self.c_prime < 1:
            raise TreeError("c_prime must be at least 1")

    def check_small(self) -> None:
        if not (self.c2 * self.c_energy * self.c_prime < 1 and self.c_prime * self.c_energy < 1):
            raise TreeError("energy constant too large: need c2*c*c' < 1 and c'*c < 1")


@dataclass(frozen=True)
class ComplexityReport:
    z: np.ndarray
    bound: np.ndarray
    energy: float
    query_estimate: float
    violations: np.ndarray
    weighted: bool = False

    @property
    def root(self) -> float:
        return float(self.z[0])

    def to_dict(self) -> dict:
        return {"energy": self.energy, "query_estimate": self.query_estimate,
                "z": self.z.tolist(), "bound": self.bound.tolist(),
                "violations": self.violations.tolist(), "weighted": self.weighted}


def query_estimate(n: int, k: int, omega: float, params: ComplexityParams | None = None) -> float:
    params = params or ComplexityParams()
    return n**2 * omega**k / params.c_energy


def induction_bound(height, kappa, n: int, omega: float, params: ComplexityParams):
    """c' * height * omega**kappa * (1 + c2*c*c'/n)**height; leaves get c'."""
    height = np.asarray(height, dtype=float)
    grow = (1 + params.c2 * params.c_energy * params.c_prime / n) ** height
    b = params.c_prime * height * np.asarray(omega, dtype=float) ** np.asarray(kappa) * grow
    return np.where(height == 0, params.c_prime, b)


def complexity_bound(analysis: FunctionAnalysis, annotation: TreeAnnotation,
                     params: ComplexityParams | None = None, k: int | None = None,
                     weighted: bool = False) -> ComplexityReport:
    """Bottom-up subformula complexity bound and the induction check.

    With ``weighted`` the first (cost-weighted) form of the composition bound
    is used: ``z = c1 + wsize_Z(x) (1 + c2 |E| max z_j)``.
    """
    params = params or ComplexityParams()
    params.check_small()
    c, n = annotation.arity, annotation.depth
    if n < 1:
        raise TreeError("complexity bound needs depth >= 1")
    kmax = int(annotation.kappa.max())
    k = kmax if k is None else k
    if k < kmax:
        raise TreeError(f"tree has kappa {kmax} > k={k}")
    omega = analysis.omega
    energy = params.c_energy * n**-2 * omega**-k
    z = np.ones(annotation.values.size)
    for lvl in range(n - 1, -1, -1):
        lo, hi = level_offset(c, lvl), level_offset(c, lvl + 1)
        zc = z[hi:hi + (hi - lo) * c].reshape(-1, c)
        codes = annotation.inputs[lo:hi]
        zmax = zc.max(axis=1)
        if weighted:
            prog = analysis.program
            ws = np.array([witness_size(prog, _bits(code, c), zc[i]).value
                           for i, code in enumerate(codes)])
            z[lo:hi] = params.c1 + ws * (1 + params.c2 * energy * zmax)
        else:
            zs = np.where(analysis.strong[codes], zc, -np.inf).max(axis=1)
            z[lo:hi] = params.c1 + analysis.wsize[codes] * zs * (1 + params.c2 * energy * zmax)
    bound = induction_bound(annotation.heights(), annotation.kappa, n, omega, params)
    violations = np.flatnonzero(z > bound)
    return ComplexityReport(z, bound, energy, 1.0 / energy, violations, weighted)


def _bits(code, c):
    return tuple((int(code) >> (c - 1 - j)) & 1 for j in range(c))


def analysis_for(spec: DirectFunctionSpec):
    from .span_program import analyze
    return analyze(normalize_trivial(build_program(spec)))


def random_k_fault_tree(analysis: FunctionAnalysis, depth: int, k: int, rng,
                        p_fault: float = 0.5, root: int | None = None) -> EvalTree:
    """Random tree with kappa <= k, generated top-down.

    Every node carries a kappa budget; strong children of a fault get one
    less, weak children get the global ``k``.
    """
    c = analysis.arity
    codes = np.arange(2**c)
    trivial_by_value = {v: codes[(analysis.values == v) & analysis.trivial] for v in (0, 1)}
    fault_by_value = {v: codes[(analysis.values == v) & ~analysis.trivial] for v in (0, 1)}
    vals = np.array([int(rng.integers(2)) if root is None else root])
    budget = np.array([k])
    for _ in range(depth):
        nxt_vals = np.empty(vals.size * c, dtype=np.int8)
        nxt_budget = np.empty(vals.size * c, dtype=np.int64)
        for i, (v, b) in enumerate(zip(vals, budget)):
            faults = fault_by_value[v]
            if b > 0 and faults.size and rng.random() < p_fault:
                code = int(rng.choice(faults))
                st = analysis.strong[code]
                nb = np.where(st, b - 1, k)
            else:
                code = int(rng.choice(trivial_by_value[v]))
                st = analysis.strong[code]
                nb = np.where(st, b, k)
            nxt_vals[i * c:(i + 1) * c] = _bits(code, c)
            nxt_budget[i * c:(i + 1) * c] = nb
        vals, budget = nxt_vals, nxt_budget
    return EvalTree(c, depth, vals)


def dumps_annotation(annotation: TreeAnnotation) -> str:
    return json.dumps(annotation.to_dict())


__all__ = [
    "EvalTree", "TreeAnnotation", "ComplexityParams", "ComplexityReport", "TreeError",
    "SpanProgramError", "eval_tree", "node_values", "annotate", "validate_k_fault",
    "complexity_bound", "query_estimate", "induction_bound", "random_k_fault_tree",
    "leaf_path", "path_index", "level_offset", "node_count",
]
