"""Hard input distributions T_1 / T_k, lazy leaf oracles and category posteriors.

A T_1 block of height ``n`` with root value ``r`` and category ``i`` is the
all-trivial tree down to depth ``i``, an independent gadget (drawn from
``G[v]`` for the node value ``v``) of height ``n0`` below every depth-``i``
node, and all-trivial trees below depth ``i + n0``.  T_k stacks ``k`` such
blocks: every leaf of a block is the root of the next one.

Inside an all-trivial segment, child ``j`` of a node with value ``v`` has
value ``v ^ x0[j]`` where ``x0`` is the input making every label 0.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .boolean_tree import EvalTree, TreeError, level_offset, path_index
from .span_program import (DirectFunctionSpec, FunctionAnalysis, analyze_spec)


class DistributionError(ValueError):
    pass


class GadgetSearchError(DistributionError):
    pass


# --------------------------------------------------------------------------- trees


def trivial_leaves(x0, r: int, height: int) -> np.ndarray:
    """Leaves of the unique all-trivial tree of the given height and root value."""
    x0 = np.asarray(x0, dtype=np.int8)
    vals = np.array([r], dtype=np.int8)
    for _ in range(height):
        vals = (vals[:, None] ^ x0[None, :]).ravel()
    return vals


def trivial_tree(spec: DirectFunctionSpec, r: int, height: int) -> EvalTree:
    analysis = _analysis(spec)
    return EvalTree(spec.arity, height, trivial_leaves(analysis.program.x0, r, height))


_ANALYSES: dict = {}


def _analysis(spec: DirectFunctionSpec) -> FunctionAnalysis:
    key = json.dumps(spec.to_dict(), sort_keys=True)
    if key not in _ANALYSES:
        _ANALYSES[key] = analyze_spec(spec)
    return _ANALYSES[key]


def _tree_tables(analysis: FunctionAnalysis, leaves: np.ndarray):
    """Root values and max kappa for a batch of explicit trees (rows of ``leaves``)."""
    c = analysis.arity
    vals = leaves.astype(np.int64)
    kap = np.zeros_like(vals)
    weights = 1 << np.arange(c - 1, -1, -1)
    kmax = np.zeros(vals.shape[0], dtype=np.int64)
    while vals.shape[1] > 1:
        groups = vals.reshape(vals.shape[0], -1, c)
        codes = groups @ weights
        st = analysis.strong[codes]
        ck = kap.reshape(kap.shape[0], -1, c)
        kap = np.where(st, ck, -1).max(axis=2) + (~analysis.trivial[codes]).astype(np.int64)
        vals = analysis.values[codes].astype(np.int64)
        kmax = np.maximum(kmax, kap.max(axis=1))
    return vals[:, 0], kmax


# --------------------------------------------------------------------------- gadgets


@dataclass(frozen=True)
class GadgetDistribution:
    """Weighted depth-``n0`` trees per root value; weights are exact fractions."""

    arity: int
    n0: int
    k0: int
    trees: dict  # r -> tuple of (leaves tuple, Fraction)

    def leaves(self, r: int) -> np.ndarray:
        return np.array([t for t, _ in self.trees[r]], dtype=np.int8)

    def weights(self, r: int) -> np.ndarray:
        return np.array([float(w) for _, w in self.trees[r]])

    def marginals(self, r: int) -> list[Fraction]:
        n_leaves = self.arity**self.n0
        return [sum((w for t, w in self.trees[r] if t[q]), Fraction(0)) for q in range(n_leaves)]

    def validate(self, analysis: FunctionAnalysis) -> None:
        for r in (0, 1):
            entries = self.trees[r]
            if not entries:
                raise DistributionError(f"empty gadget distribution for root {r}")
            if sum(w for _, w in entries) != 1 or any(w <= 0 for _, w in entries):
                raise DistributionError("gadget weights must be positive and sum to 1")
            roots, kmax = _tree_tables(analysis, self.leaves(r))
            if np.any(roots != r):
                raise DistributionError(f"gadget with wrong root value in G_{r}")
            if np.any(kmax > self.k0):
                raise DistributionError(f"gadget in G_{r} violates the {self.k0}-fault condition")
            if any(m != Fraction(1, 2) for m in self.marginals(r)):
                raise DistributionError(f"leaf marginals of G_{r} are not uniform")

    def to_dict(self) -> dict:
        return {"arity": self.arity, "n0": self.n0, "k0": self.k0,
                "trees": {str(r): [{"leaves": list(t), "weight": str(w)} for t, w in self.trees[r]]
                          for r in (0, 1)}}

    @classmethod
    def from_dict(cls, data: dict) -> "GadgetDistribution":
        trees = {int(r): tuple((tuple(int(b) for b in e["leaves"]), Fraction(e["weight"]))
                               for e in entries) for r, entries in data["trees"].items()}
        return cls(int(data["arity"]), int(data["n0"]), int(data["k0"]), trees)


NAND_GADGETS = {
    1: ((1, 1, 0, 0), (0, 0, 1, 1)),
    0: ((0, 1, 1, 0), (1, 0, 0, 1)),
}


def _exact_mixture(cands: np.ndarray) -> list[tuple[int, Fraction]] | None:
    """Rational weights over candidate trees giving every leaf marginal 1/2."""
    m, L = cands.shape
    if m == 0:
        return None
    A_eq = np.vstack([cands.T.astype(float), np.ones((1, m))])
    b_eq = np.concatenate([np.full(L, 0.5), [1.0]])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        return None
    support = np.flatnonzero(res.x > 1e-9)
    # exact re-solve on the support
    rows = [[Fraction(int(v)) for v in cands[support, q]] + [Fraction(1, 2)] for q in range(L)]
    rows.append([Fraction(1)] * len(support) + [Fraction(1)])
    sol = _solve_fraction(rows, len(support))
    if sol is None or any(w <= 0 for w in sol):
        sol = [Fraction(float(res.x[j])).limit_denominator(10**6) for j in support]
    pairs = list(zip(support.tolist(), sol))
    ok = sum(w for _, w in pairs) == 1 and all(
        sum((w for j, w in pairs if cands[j, q]), Fraction(0)) == Fraction(1, 2) for q in range(L))
    return pairs if ok and all(w > 0 for _, w in pairs) else None


def _solve_fraction(rows, n):
    """Gauss-Jordan over Fractions for an augmented system; None if inconsistent."""
    rows = [r[:] for r in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    if any(all(v == 0 for v in row[:n]) and row[n] != 0 for row in rows):
        return None
    sol = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        sol[col] = rows[i][n]
    return sol


def search_gadgets(spec: DirectFunctionSpec, max_leaves: int = 20,
                   max_k0: int | None = None) -> GadgetDistribution:
    """Smallest (n0, k0) admitting gadget distributions, by exhaustive enumeration."""
    analysis = _analysis(spec)
    c = spec.arity
    n0 = 1
    while c**n0 <= max_leaves:
        L = c**n0
        labelings = ((np.arange(2**L)[:, None] >> np.arange(L - 1, -1, -1)) & 1).astype(np.int8)
        roots, kmax = _tree_tables(analysis, labelings)
        top = n0 if max_k0 is None else max_k0
        for k0 in range(0, top + 1):
            trees = {}
            for r in (0, 1):
                cands = labelings[(roots == r) & (kmax <= k0)]
                mix = _exact_mixture(cands)
                if mix is None:
                    break
                trees[r] = tuple((tuple(int(b) for b in cands[j]), w) for j, w in mix)
            if len(trees) == 2:
                dist = GadgetDistribution(c, n0, k0, trees)
                dist.validate(analysis)
                return dist
        n0 += 1
    raise GadgetSearchError(
        f"no gadget distribution found with at most {max_leaves} gadget leaves")


def default_gadgets(spec: DirectFunctionSpec, max_leaves: int = 20) -> GadgetDistribution:
    analysis = _analysis(spec)
    if spec.arity == 2 and analysis.values.tolist() == [1, 1, 1, 0]:
        half = Fraction(1, 2)
        dist = GadgetDistribution(2, 2, 1, {r: tuple((t, half) for t in NAND_GADGETS[r]) for r in (0, 1)})
        dist.validate(analysis)
        return dist
    return search_gadgets(spec, max_leaves)


# --------------------------------------------------------------------------- spec


@dataclass(frozen=True)
class HardDistSpec:
    function: DirectFunctionSpec
    n: int
    k: int = 1
    gadgets: GadgetDistribution | None = None

    def __post_init__(self):
        if self.gadgets is None:
            object.__setattr__(self, "gadgets", default_gadgets(self.function))
        if self.gadgets.arity != self.function.arity:
            raise DistributionError("gadget arity does not match the function")
        if self.k < 1:
            raise DistributionError("k must be at least 1")
        if self.n_tilde <= 1:
            raise DistributionError(f"n - n0 = {self.n_tilde} must exceed 1")
        if self.n < 4 * self.n0:
            warnings.warn(f"n={self.n} is below 4*n0={4 * self.n0}; distribution is far from asymptotic",
                          stacklevel=2)

    @property
    def arity(self) -> int:
        return self.function.arity

    @property
    def n0(self) -> int:
        return self.gadgets.n0

    @property
    def k0(self) -> int:
        return self.gadgets.k0

    @property
    def n_tilde(self) -> int:
        return self.n - self.n0

    @property
    def beta(self) -> int:
        return int(math.floor(math.log2(self.n_tilde) / 10))

    @property
    def height(self) -> int:
        return self.k * self.n

    @property
    def x0(self) -> np.ndarray:
        return np.array(_analysis(self.function).program.x0, dtype=np.int8)

    def to_dict(self) -> dict:
        return {"function": self.function.to_dict(), "n": self.n, "k": self.k,
                "gadgets": self.gadgets.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "HardDistSpec":
        fn = DirectFunctionSpec.from_dict(data["function"])
        gadgets = GadgetDistribution.from_dict(data["gadgets"]) if data.get("gadgets") else None
        return cls(fn, int(data["n"]), int(data.get("k", 1)), gadgets)


# --------------------------------------------------------------------------- oracle


def _uniform(seed: int, tag: str, level: int, path) -> float:
    h = hashlib.blake2b(f"{seed}|{tag}|{level}|".encode() + bytes(path), digest_size=8)
    return int.from_bytes(h.digest(), "little") / 2.0**64


class LazyTreeOracle:
    """Deterministic, memoized, query-counted leaf oracle for a T_k sample.

    All random choices are hashes of ``(seed, tag, level, node path)``, so
    values never depend on query order.  Not thread safe; confine each
    oracle to one worker.
    """

    def __init__(self, spec: HardDistSpec, seed: int, forced_root: int | None = None):
        self.spec = spec
        self.seed = int(seed)
        self.forced_root = forced_root
        self.arity = spec.arity
        self.height = spec.height
        self._x0 = spec.x0
        self._gleaves = {r: spec.gadgets.leaves(r) for r in (0, 1)}
        self._gcum = {r: np.cumsum(spec.gadgets.weights(r)) for r in (0, 1)}
        self._categories: dict = {}
        self._choices: dict = {}
        self._leaves: dict = {}
        self.transcript: list = []

    @property
    def queries(self) -> int:
        return len(self._leaves)

    @property
    def root_value(self) -> int:
        if self.forced_root is not None:
            return int(self.forced_root)
        return int(_uniform(self.seed, "root", 0, ()) < 0.5)

    def category(self, prefix=()) -> int:
        """Category (gadget depth, 1..n~) of the block rooted at ``prefix``."""
        prefix = tuple(prefix)
        if prefix not in self._categories:
            level = len(prefix) // self.spec.n
            u = _uniform(self.seed, "cat", level, prefix)
            self._categories[prefix] = 1 + min(int(u * self.spec.n_tilde), self.spec.n_tilde - 1)
        return self._categories[prefix]

    def gadget_choice(self, node_path, v: int) -> int:
        node_path = tuple(node_path)
        if node_path not in self._choices:
            level = len(node_path) // self.spec.n
            u = _uniform(self.seed, "gadget", level, node_path)
            cum = self._gcum[v]
            self._choices[node_path] = min(int(np.searchsorted(cum, u, side="right")), cum.size - 1)
        return self._choices[node_path]

    def _par(self, seg) -> int:
        return int(np.bitwise_xor.reduce(self._x0[list(seg)])) if len(seg) else 0

    def _resolve(self, path) -> int:
        spec = self.spec
        n, n0 = spec.n, spec.n0
        v = self.root_value
        for lvl in range(spec.k):
            prefix = path[:lvl * n]
            seg = path[lvl * n:(lvl + 1) * n]
            i = self.category(prefix)
            vd = v ^ self._par(seg[:i])
            g = self.gadget_choice(prefix + seg[:i], vd)
            ve = int(self._gleaves[vd][g, path_index(seg[i:i + n0], self.arity)])
            v = ve ^ self._par(seg[i + n0:])
        return v

    def check_path(self, path) -> tuple:
        path = tuple(int(d) for d in path)
        if len(path) != self.height or any(not 0 <= d < self.arity for d in path):
            raise DistributionError(f"malformed leaf path of length {len(path)}")
        return path

    def query(self, path) -> int:
        path = self.check_path(path)
        if path not in self._leaves:
            self._leaves[path] = self._resolve(path)
            self.transcript.append((path, self._leaves[path], len(self._leaves)))
        return self._leaves[path]

    def is_known(self, path) -> bool:
        return tuple(path) in self._leaves

    def peek(self, path) -> int:
        """Leaf value without counting a query (for ground truth in experiments)."""
        return self._resolve(self.check_path(path))

    def block_root_value(self, prefix) -> int:
        """Value of the block root at ``prefix`` (length a multiple of n), uncounted."""
        prefix = tuple(int(d) for d in prefix)
        n, n0 = self.spec.n, self.spec.n0
        if len(prefix) % n or len(prefix) > self.height:
            raise DistributionError("block roots sit at depths that are multiples of n")
        v = self.root_value
        for lvl in range(len(prefix) // n):
            seg = prefix[lvl * n:(lvl + 1) * n]
            i = self.category(prefix[:lvl * n])
            vd = v ^ self._par(seg[:i])
            g = self.gadget_choice(prefix[:lvl * n] + seg[:i], vd)
            v = int(self._gleaves[vd][g, path_index(seg[i:i + n0], self.arity)]) ^ self._par(seg[i + n0:])
        return v

    def materialize(self) -> np.ndarray:
        """All leaves in path order (uncounted)."""
        return self._block(0, (), self.root_value)

    def _block(self, lvl: int, prefix: tuple, v: int) -> np.ndarray:
        spec = self.spec
        c, n, n0 = self.arity, spec.n, spec.n0
        i = self.category(prefix)
        vals = trivial_leaves(self._x0, v, i)
        parts = []
        for idx, vd in enumerate(vals):
            node = prefix + _digits(idx, c, i)
            g = self.gadget_choice(node, int(vd))
            parts.append(self._gleaves[int(vd)][g])
        vals = np.concatenate(parts).astype(np.int8)
        for _ in range(spec.n_tilde - i):
            vals = (vals[:, None] ^ self._x0[None, :]).ravel()
        if lvl == spec.k - 1:
            return vals
        return np.concatenate([self._block(lvl + 1, prefix + _digits(j, c, n), int(b))
                               for j, b in enumerate(vals)])

    def tree(self) -> EvalTree:
        return EvalTree(self.arity, self.height, self.materialize())

    def transcript_jsonl(self) -> str:
        return "".join(json.dumps({"path": list(p), "bit": b, "counter": q}) + "\n"
                       for p, b, q in self.transcript)


def _digits(index: int, c: int, length: int) -> tuple:
    out = []
    for _ in range(length):
        index, d = divmod(index, c)
        out.append(d)
    return tuple(reversed(out))


def sample_hard_tree(spec: HardDistSpec, seed: int, forced_root: int | None = None) -> LazyTreeOracle:
    return LazyTreeOracle(spec, seed, forced_root)


def oracle_query(oracle: LazyTreeOracle, leaf_path) -> int:
    return oracle.query(leaf_path)


# --------------------------------------------------------------------------- posterior


class PosteriorTracker:
    """Exact ``p_cat(i, r)`` for one T_1 block of height ``n``.

    ``p_cat(i, r)`` is the probability that a tree drawn from the block's
    distribution with category ``i`` and root ``r`` agrees with every
    observed leaf; row ``i - 1`` of :attr:`p` holds category ``i``.
    """

    def __init__(self, spec: HardDistSpec):
        self.spec = spec
        self.n, self.n0, self.n_tilde = spec.n, spec.n0, spec.n_tilde
        self.c = spec.arity
        self._x0 = spec.x0
        self._gleaves = {r: spec.gadgets.leaves(r) for r in (0, 1)}
        self._gweights = {r: spec.gadgets.weights(r) for r in (0, 1)}
        self.p = np.ones((self.n_tilde, 2))
        self.paths = np.zeros((0, self.n), dtype=np.int64)
        self.bits = np.zeros(0, dtype=np.int8)
        self.categories = np.arange(1, self.n_tilde + 1)

    def copy(self) -> "PosteriorTracker":
        new = object.__new__(PosteriorTracker)
        new.__dict__.update(self.__dict__)
        new.p = self.p.copy()
        return new

    @property
    def S(self) -> float:
        return float(self.p.sum())

    @property
    def D(self) -> float:
        return float(np.abs(self.p[:, 0] - self.p[:, 1]).sum())

    def confidence(self) -> float:
        s = self.S
        if s <= 0:
            raise DistributionError("every tree has been excluded (S = 0)")
        return float(abs(self.p[:, 0].sum() - self.p[:, 1].sum()) / s)

    def d_over_s(self) -> float:
        s = self.S
        if s <= 0:
            raise DistributionError("every tree has been excluded (S = 0)")
        return self.D / s

    def root_posterior(self, prior1: float = 0.5) -> float:
        """P(root = 1 | observations) under a prior on the root."""
        s0, s1 = self.p[:, 0].sum() * (1 - prior1), self.p[:, 1].sum() * prior1
        return float(s1 / (s0 + s1))

    def category_posterior(self) -> np.ndarray:
        m = self.p.sum(axis=1)
        return m / m.sum()

    def _par(self, seg) -> int:
        return int(np.bitwise_xor.reduce(self._x0[np.asarray(seg, dtype=np.int64)])) if len(seg) else 0

    def split_depth(self, path) -> int:
        """Deepest common-ancestor depth between ``path`` and any observed leaf (-1 if none)."""
        if not self.bits.size:
            return -1
        same = np.cumprod(self.paths == np.asarray(path)[None, :], axis=1)
        return int(same.sum(axis=1).max())

    def _factor(self, i: int, r: int, paths, bits) -> float:
        """Probability that the gadget under depth-i node agrees with these leaves."""
        n0 = self.n0
        vd = r ^ self._par(paths[0][:i])
        need = {}
        for path, b in zip(paths, bits):
            q = path_index(path[i:i + n0], self.c)
            req = int(b) ^ self._par(path[i + n0:])
            if need.setdefault(q, req) != req:
                return 0.0
        leaves = self._gleaves[vd]
        qs = np.fromiter(need.keys(), dtype=np.int64)
        reqs = np.fromiter(need.values(), dtype=np.int8)
        ok = np.all(leaves[:, qs] == reqs[None, :], axis=1)
        return float(self._gweights[vd][ok].sum())

    def multipliers(self, path) -> tuple[np.ndarray, np.ndarray]:
        """Conditional probabilities of observing 0 / 1 at ``path`` for every (i, r)."""
        path = np.asarray(path, dtype=np.int64)
        if path.shape != (self.n,) or np.any((path < 0) | (path >= self.c)):
            raise DistributionError("malformed block leaf path")
        h = self.split_depth(path)
        if h == self.n:
            raise DistributionError("leaf already observed")
        I = self.categories
        m1 = np.full((self.n_tilde, 2), 0.5)
        det = I + self.n0 <= h
        if det.any():
            same = np.cumprod(self.paths == path[None, :], axis=1).sum(axis=1)
            j = int(np.flatnonzero(same == h)[0])
            node = int(self.bits[j]) ^ self._par(self.paths[j][h:])
            predicted = node ^ self._par(path[h:])
            m1[det] = float(predicted)
        mid = np.flatnonzero(~det & (I <= h))
        for row in mid:
            i = int(I[row])
            under = np.flatnonzero(np.all(self.paths[:, :i] == path[None, :i], axis=1))
            paths, bits = self.paths[under], self.bits[under]
            for r in (0, 1):
                old = self._factor(i, r, paths, bits)
                if old <= 0:
                    m1[row, r] = 0.5  # row already excluded; value irrelevant
                    continue
                new1 = self._factor(i, r, np.vstack([paths, path]), np.append(bits, 1))
                m1[row, r] = new1 / old
        return 1.0 - m1, m1

    def outcome_probability(self, path) -> float:
        """Predictive probability that ``path`` evaluates to 1 (uniform prior over i and r)."""
        _, m1 = self.multipliers(path)
        s = self.S
        return float((self.p * m1).sum() / s) if s > 0 else 0.5

    def update(self, path, observed: int) -> "PosteriorTracker":
        m0, m1 = self.multipliers(path)
        new = self.p * (m1 if observed else m0)
        if new.sum() <= 0:
            raise DistributionError("observation excludes every category: input is not from T_1")
        self.p = new
        self.paths = np.vstack([self.paths, np.asarray(path, dtype=np.int64)])
        self.bits = np.append(self.bits, np.int8(observed))
        return self


def posterior_update(tracker: PosteriorTracker, leaf_path, observed: int) -> PosteriorTracker:
    return tracker.update(leaf_path, observed)


def confidence(tracker: PosteriorTracker) -> float:
    return tracker.confidence()


def tree_likelihood(p_root: dict, block_leaf_values: dict) -> float:
    """Product over block leaves ``a`` of ``p_root[a][v(a)]`` for one candidate top block."""
    out = 1.0
    for a, v in block_leaf_values.items():
        if a in p_root:
            out *= p_root[a][v]
    return out
