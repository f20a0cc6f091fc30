"""Quantum-walk picture of NAND tree evaluation.

Each NAND gate is a Y gadget: the gate node is joined to its two inputs and
to its output.  For an eigenvector of ``H = -A`` with eigenvalue ``E`` the
ratio ``y(node) = psi(node) / psi(next node towards the root)`` obeys

    y_parent = -1 / (y_left + y_right + E).

A value-1 node has ``y ~ a*E`` (complexity ``a``), a value-0 node has
``y ~ -1/(b*E)`` (complexity ``b``).  A pendant leaf solves ``-psi_parent =
E*psi_leaf``, so its ratio is ``-1/E``: present leaves carry value 0 and
value-1 leaves are left out of the graph (their ratio is ``0 = 0*E``).
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boolean_tree import (EvalTree, TreeError, analysis_for, annotate, level_offset,
                           node_values, random_k_fault_tree)
from .span_program import DirectFunctionSpec

VALIDITY = 0.1          # largest allowed complexity * E
RESONANCE_TOL = 1e-12
SUPPORT_TOL = 1e-9      # amplitude on the tail node
CLUSTER_TOL = 1e-8      # eigenvalues closer than this share an eigenspace
ZERO_TOL = 1e-9


class WalkError(ValueError):
    pass


class ResonanceError(WalkError):
    """Ratio recursion divided by (almost) zero: E sits on an eigenvalue."""


_NAND = DirectFunctionSpec.nand()


def _check_nand(tree: EvalTree) -> None:
    if tree.arity != 2:
        raise TreeError(f"the Y gadget realizes binary NAND only, got arity {tree.arity}")


# --------------------------------------------------------------------------- graph


@dataclass(frozen=True)
class WalkGraph:
    """Composed Y gadgets plus one tail node above the root.

    ``positions[g]`` is the breadth-first tree index of graph node ``g``, or
    -1 for the tail.  Node 0 is the tree root and the tail is the last node.
    """

    positions: np.ndarray
    edges: np.ndarray       # (m, 2) graph node pairs

    @property
    def size(self) -> int:
        return int(self.positions.size)

    @property
    def root(self) -> int:
        return 0

    @property
    def tail(self) -> int:
        return self.size - 1

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.size, self.size))
        A[self.edges[:, 0], self.edges[:, 1]] = 1.0
        A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return A

    def hamiltonian(self) -> np.ndarray:
        return -self.adjacency()

    def is_tree(self) -> bool:
        if self.edges.shape[0] != self.size - 1:
            return False
        seen = np.zeros(self.size, dtype=bool)
        nbrs = [[] for _ in range(self.size)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        stack, seen[0] = [0], True
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())

    def bipartition(self) -> np.ndarray:
        """Side of every node (tree parity, tail opposite the root)."""
        depth = np.zeros(self.size, dtype=np.int64)
        pos = self.positions
        inner = pos >= 0
        depth[inner] = np.floor(np.log2(pos[inner] + 1)).astype(np.int64)
        depth[~inner] = -1
        return depth % 2

    def to_edgelist(self) -> str:
        """One ``u v`` line per edge, nodes named by tree index and ``z`` for the tail."""
        names = [("z" if p < 0 else str(int(p))) for p in self.positions]
        lines = [f"{names[u]} {names[v]}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "WalkGraph":
        pairs = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        labels = sorted({p for pair in pairs for p in pair if p != "z"}, key=int)
        if "z" not in {p for pair in pairs for p in pair}:
            raise WalkError("edge list has no tail node z")
        positions = np.array([int(p) for p in labels] + [-1], dtype=np.int64)
        index = {lab: g for g, lab in enumerate(labels)}
        index["z"] = len(labels)
        edges = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64).reshape(-1, 2)
        return cls(positions, edges)


def build_walk_graph(tree: EvalTree) -> WalkGraph:
    """Y-gadget graph of an explicit NAND tree (value-0 leaves present, value-1 absent)."""
    _check_nand(tree)
    leaves_from = level_offset(2, tree.depth)
    values = node_values(_NAND, tree)
    keep = np.ones(values.size, dtype=bool)
    keep[leaves_from:] = values[leaves_from:] == 0
    if tree.depth == 0:
        keep[0] = True  # a lone root stays; its value lives in the tail ratio
    positions = np.flatnonzero(keep)
    gid = {int(p): g for g, p in enumerate(positions)}
    edges = [(gid[(int(p) - 1) // 2], g) for g, p in enumerate(positions) if p > 0]
    tail = positions.size
    edges.insert(0, (tail, 0))
    return WalkGraph(np.append(positions, -1).astype(np.int64),
                     np.array(edges, dtype=np.int64).reshape(-1, 2))


def graph_root_ratio(graph: WalkGraph, E: float) -> float:
    """``psi(root)/psi(tail)`` of the E-eigen-equation solved below the tail.

    Equals ``[(H_sub - E)^-1]_{root, root}`` with ``H_sub`` the Hamiltonian
    without the tail; this is what the ratio recursion computes.
    """
    keep = np.arange(graph.size - 1)
    H = graph.hamiltonian()[np.ix_(keep, keep)]
    rhs = np.zeros(keep.size)
    rhs[graph.root] = 1.0
    try:
        sol = np.linalg.solve(H - E * np.eye(keep.size), rhs)
    except np.linalg.LinAlgError as exc:
        raise ResonanceError(f"E = {E} is an eigenvalue of the subtree") from exc
    return float(sol[graph.root])


# --------------------------------------------------------------------------- spectrum


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    root_support: np.ndarray    # bool per eigenvalue
    gap: float
    max_residual: float
    symmetric: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eigenvalue", "root_support"])
        for lam, s in zip(self.eigenvalues, self.root_support):
            w.writerow([f"{lam:.17g}", int(s)])
        return buf.getvalue()


def _clusters(eigenvalues: np.ndarray) -> np.ndarray:
    labels = np.zeros(eigenvalues.size, dtype=np.int64)
    if eigenvalues.size:
        labels[1:] = np.cumsum(np.diff(eigenvalues) > CLUSTER_TOL)
    return labels


def hamiltonian_spectrum(graph: WalkGraph) -> SpectrumReport:
    """Full spectrum of ``H = -A`` with root-tail support per eigenvalue.

    Degenerate eigenvectors are only defined up to rotation, so support is
    decided per eigenspace: the norm of the tail's projection onto it.
    """
    H = graph.hamiltonian()
    lam, vec = np.linalg.eigh(H)
    residual = float(np.abs(H @ vec - vec * lam).max()) if lam.size else 0.0
    labels = _clusters(lam)
    weight = np.bincount(labels, weights=vec[graph.tail] ** 2)
    support = np.sqrt(weight[labels]) > SUPPORT_TOL
    nonzero = support & (np.abs(lam) > ZERO_TOL)
    if not nonzero.any():
        raise WalkError("no root-supported nonzero eigenvalue")
    symmetric = bool(np.allclose(np.sort(lam), np.sort(-lam), atol=1e-9))
    return SpectrumReport(lam, support, float(np.abs(lam[nonzero]).min()), residual, symmetric)


def _gap_row(args):
    depth, k, sample, seed, p_fault = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, depth, k, sample]))
    tree = random_k_fault_tree(analysis_for(_NAND), depth, k, rng, p_fault=p_fault)
    kappa = int(annotate(analysis_for(_NAND), tree).kappa.max())
    rep = hamiltonian_spectrum(build_walk_graph(tree))
    return {"depth": depth, "k": k, "sample": sample, "kappa": kappa,
            "root": int(node_values(_NAND, tree)[0]), "gap": rep.gap,
            "scaled": rep.gap * depth**2 * 2.0**k, "residual": rep.max_residual,
            "symmetric": rep.symmetric}


def gap_scan(depths, ks, samples: int, seed: int, p_fault: float = 0.5, jobs: int = 1) -> list[dict]:
    """Root-supported gap of random k-fault trees; ``scaled`` is gap * n^2 * 2^k."""
    args = [(int(d), int(k), s, seed, p_fault) for d in depths for k in ks for s in range(samples)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_gap_row, args))
    return [_gap_row(a) for a in args]


# --------------------------------------------------------------------------- ratios


@dataclass
class RatioState:
    """Breadth-first per-node ratio, extracted complexity and sign class."""

    E: float
    ratio: np.ndarray
    complexity: np.ndarray
    value_like: np.ndarray      # 1 where y >= 0

    @property
    def root_ratio(self) -> float:
        return float(self.ratio[0])

    def to_dict(self) -> dict:
        return {"E": self.E, "ratio": self.ratio.tolist(), "complexity": self.complexity.tolist(),
                "value_like": self.value_like.tolist()}


def _complexity(y: np.ndarray, E: float) -> np.ndarray:
    out = np.empty_like(y)
    pos = y >= 0
    out[pos] = y[pos] / E
    out[~pos] = -1.0 / (y[~pos] * E)
    return out


def propagate_ratios(tree: EvalTree, E: float, a_leaf: float = 1.0, b_leaf: float = 1.0,
                     validity: float = VALIDITY) -> RatioState:
    """Exact bottom-up ratio recursion with leaf seeds ``a_leaf*E`` / ``-1/(b_leaf*E)``."""
    _check_nand(tree)
    if not E > 0:
        raise WalkError(f"E must be positive, got {E}")
    if a_leaf < 0 or b_leaf <= 0:
        raise WalkError("leaf complexities need a_leaf >= 0 and b_leaf > 0")
    leaves = tree.leaves
    y_level = np.where(leaves == 1, a_leaf * E, -1.0 / (b_leaf * E))
    levels = [y_level]
    for _ in range(tree.depth):
        denom = levels[-1].reshape(-1, 2).sum(axis=1) + E
        if np.any(np.abs(denom) < RESONANCE_TOL):
            raise ResonanceError(f"resonance at E = {E}")
        levels.append(-1.0 / denom)
    y = np.concatenate(levels[::-1])
    comp = _complexity(y, E)
    worst = float(comp.max() * E)
    if worst > validity:
        raise WalkError(f"E = {E} too large: max complexity * E = {worst:.3g} > {validity}")
    return RatioState(float(E), y, comp, (y >= 0).astype(np.int8))


def propagate_first_order(tree: EvalTree, a_leaf: float = 1.0, b_leaf: float = 1.0) -> np.ndarray:
    """Complexities under the idealized gate rules, breadth-first.

    ``{00}`` gives ``a = b1*b2/(b1+b2)``, ``{11}`` gives ``b = a1 + a2`` and a
    mixed input passes on the ``b`` of its 0-valued input.
    """
    _check_nand(tree)
    if a_leaf <= 0 or b_leaf <= 0:
        raise WalkError("first-order rules need positive leaf complexities")
    vals = tree.leaves.astype(np.int8)
    comp = np.where(vals == 1, float(a_leaf), float(b_leaf))
    levels = [comp]
    for _ in range(tree.depth):
        v = vals.reshape(-1, 2)
        q = comp.reshape(-1, 2)
        both0 = (v == 0).all(axis=1)
        both1 = (v == 1).all(axis=1)
        mixed_b = np.where(v[:, 0] == 0, q[:, 0], q[:, 1])
        comp = np.where(both0, q.prod(axis=1) / q.sum(axis=1),
                        np.where(both1, q.sum(axis=1), mixed_b))
        vals = (~both1).astype(np.int8)
        levels.append(comp)
    return np.concatenate(levels[::-1])


@dataclass
class RuleReport:
    c_fit: float            # max complexity / (2^kappa * (height + 1))
    sign_matches: bool      # every node's sign class equals its value
    root_sign_ok: bool      # y_root < 0 iff root value is 0
    root_complexity: float
    state: RatioState

    def to_dict(self) -> dict:
        return {"c_fit": self.c_fit, "sign_matches": self.sign_matches,
                "root_sign_ok": self.root_sign_ok, "root_complexity": self.root_complexity,
                "root_ratio": self.state.root_ratio, "E": self.state.E}


def verify_complexity_rules(tree: EvalTree, E: float, a_leaf: float = 1.0, b_leaf: float = 1.0) -> RuleReport:
    """Propagate at ``E`` and compare complexities against ``2^kappa * (height + 1)``."""
    state = propagate_ratios(tree, E, a_leaf, b_leaf)
    ann = annotate(analysis_for(_NAND), tree)
    values = ann.values
    scale = 2.0 ** ann.kappa * (ann.heights() + 1)
    return RuleReport(float((state.complexity / scale).max()),
                      bool(np.array_equal(state.value_like, values)),
                      bool((state.root_ratio < 0) == (values[0] == 0)),
                      float(state.complexity[0]), state)


__all__ = [
    "WalkGraph", "WalkError", "ResonanceError", "SpectrumReport", "RatioState", "RuleReport",
    "build_walk_graph", "graph_root_ratio", "hamiltonian_spectrum", "gap_scan",
    "propagate_ratios", "propagate_first_order", "verify_complexity_rules",
]
