"""Classical baselines with exact query accounting.

``solve_shortcircuit`` is the exact randomized short-circuit evaluator.
``solve_splitsearch`` is a noisy binary search for the gadget depth of each
block of a T_k tree, driven by the exact category posterior.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hard_distribution import (DistributionError, HardDistSpec, PosteriorTracker, _digits,
                                sample_hard_tree)
from .span_program import DirectFunctionSpec, input_bits

UNBOUNDED_LEAF_LIMIT = 2**24  # short-circuit without a budget reads ~N^0.75 of N leaves
CSV_HEADER = ["algorithm", "n", "k", "trials", "budget", "success", "mean_queries", "seed"]


@dataclass
class SolveResult:
    answer: int
    queries: int
    confidence_trace: list = field(default_factory=list)
    category: int | None = None
    bound_trace: list = field(default_factory=list)  # (queries, D, S) of the top block after each probe


# --------------------------------------------------------------------------- short circuit


def _forced(table: np.ndarray, c: int, known: dict) -> int | None:
    """Output value if the known children already determine it."""
    outs = set()
    for code in range(2**c):
        bits = input_bits(code, c)
        if all(bits[j] == v for j, v in known.items()):
            outs.add(int(table[code]))
            if len(outs) > 1:
                return None
    return outs.pop()


def solve_shortcircuit(spec: DirectFunctionSpec, oracle, rng=None, budget: int | None = None) -> SolveResult:
    """Evaluate children in random order, stopping once the node value is forced.

    With ``rng=None`` children are taken left to right.  If ``budget`` runs
    out the answer is a coin flip from ``rng`` (0 without one).
    """
    c = oracle.arity
    table = spec.table()
    start = oracle.queries

    class _OutOfBudget(Exception):
        pass

    def ev(prefix):
        if len(prefix) == oracle.height:
            if budget is not None and oracle.queries - start >= budget and not oracle.is_known(prefix):
                raise _OutOfBudget
            return oracle.query(prefix)
        order = list(range(c)) if rng is None else [int(j) for j in rng.permutation(c)]
        known = {}
        for j in order:
            known[j] = ev(prefix + (j,))
            out = _forced(table, c, known)
            if out is not None:
                return out
        raise AssertionError("all children known but value not forced")

    try:
        answer = ev(())
    except _OutOfBudget:
        answer = int(rng.integers(2)) if rng is not None else 0
    return SolveResult(answer, oracle.queries - start)


# --------------------------------------------------------------------------- split search


def _entropy(p):
    p = np.clip(np.asarray(p, dtype=float), 1e-300, 1.0)
    q = np.clip(1.0 - p, 1e-300, 1.0)
    return -(p * np.log2(p) + q * np.log2(q))


class _BlockSearch:
    """Greedy information-driven search inside one T_1 block."""

    def __init__(self, spec: HardDistSpec, rng, n_split_candidates: int = 5, top_categories: int = 3):
        self.spec = spec
        self.rng = rng
        self.n, self.n0, self.c = spec.n, spec.n0, spec.arity
        self.tracker = PosteriorTracker(spec)
        self.ref = (0,) * self.n
        self.used: set = set()
        self.n_split = n_split_candidates
        self.top = top_categories

    def _sibling(self, digit: int) -> int:
        if self.c == 2:
            return 1 - digit
        return (digit + int(self.rng.integers(1, self.c))) % self.c

    def _split_candidates(self):
        pi = self.tracker.category_posterior()
        cum = np.concatenate([[0.0], np.cumsum(pi)])
        hs = np.arange(self.n)
        below = cum[np.clip(hs - self.n0 + 1, 0, pi.size)]  # mass of i <= h - n0
        rest = 1.0 - below
        # approximate: i > h - n0 treated as a fair coin
        gain = _entropy(below + rest / 2) - rest
        order = np.argsort(-gain, kind="stable")
        out = []
        for h in order:
            path = self.ref[:h] + (self._sibling(self.ref[h]),) + self.ref[h + 1:]
            if path not in self.used:
                out.append(path)
            if len(out) >= self.n_split:
                break
        return out

    def _gadget_candidates(self):
        pi = self.tracker.category_posterior()
        out = []
        for row in np.argsort(-pi, kind="stable")[:self.top]:
            if pi[row] <= 0:
                break
            i = int(row) + 1
            for q in range(self.c**self.n0):
                path = self.ref[:i] + _digits(q, self.c, self.n0) + self.ref[i + self.n0:]
                if path not in self.used and path not in out:
                    out.append(path)
        return out

    def _score(self, path) -> float:
        tr = self.tracker
        _, m1 = tr.multipliers(path)
        w = tr.p / tr.S
        p1 = float((w * m1).sum())
        return float(_entropy(p1) - (w * _entropy(m1)).sum())

    def next_query(self):
        if not self.used:
            return self.ref
        best, best_score = None, -1.0
        for path in self._split_candidates() + self._gadget_candidates():
            s = self._score(path)
            if s > best_score + 1e-12:
                best, best_score = path, s
        return best

    def observe(self, path, bit) -> None:
        self.used.add(tuple(path))
        try:
            self.tracker.update(path, bit)
        except DistributionError:
            # a noisy sub-block answer contradicted everything; drop it
            pass

    def guess(self) -> int:
        s0, s1 = self.tracker.p[:, 0].sum(), self.tracker.p[:, 1].sum()
        if s0 == s1:
            return int(self.rng.integers(2))
        return int(s1 > s0)


def _run_block(spec, prefix, budget, level, oracle, rng, trace, memo, stop_when_certain=True):
    """Solve the block rooted at ``prefix``; block leaves below the last level recurse."""
    search = _BlockSearch(spec, rng)
    for _ in range(budget):
        path = search.next_query()
        if path is None:
            break
        full = prefix + tuple(path)
        if level == spec.k - 1:
            bit = oracle.query(full)
        else:
            if full not in memo:
                memo[full] = _run_block(spec, full, budget, level + 1, oracle, rng, None, memo,
                                        stop_when_certain)[0]
            bit = memo[full]
        search.observe(path, bit)
        if trace is not None:
            tr = search.tracker
            trace.append((oracle.queries, tr.confidence(), tr.D, tr.S))
        if stop_when_certain and search.tracker.confidence() >= 1.0:
            break
    cat = int(np.argmax(search.tracker.category_posterior())) + 1
    return search.guess(), cat, search.tracker


def solve_splitsearch(spec: HardDistSpec, oracle, budget: int, rng=None,
                      stop_when_certain: bool = True) -> SolveResult:
    """Noisy binary search on every block, spending ``budget**(1/k)`` probes per block.

    Probes compare a fresh leaf with the block's reference (leftmost) leaf at
    a chosen divergence depth, or read other gadget leaves under a likely
    category.  Each probe maximizes the expected information about
    (category, root) under the exact posterior.  The answer is the maximum
    posterior root; ties are a coin flip from ``rng``.  With
    ``stop_when_certain=False`` probing continues after the root is known,
    which sharpens the reported ``category``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    start = oracle.queries
    per_level = max(1, int(math.floor(budget ** (1.0 / spec.k) + 1e-9)))
    trace: list = []
    answer, cat, _ = _run_block(spec, (), per_level, 0, oracle, rng, trace, {}, stop_when_certain)
    return SolveResult(answer, oracle.queries - start, [(q - start, c) for q, c, _, _ in trace], cat,
                       [(q - start, d, s) for q, _, d, s in trace])


# --------------------------------------------------------------------------- benchmark


def _trial(args):
    spec_dict, algorithm, budget, oracle_seed, rng_seed = args
    spec = HardDistSpec.from_dict(spec_dict)
    rng = np.random.default_rng(rng_seed)
    oracle = sample_hard_tree(spec, oracle_seed)
    if algorithm == "shortcircuit":
        res = solve_shortcircuit(spec.function, oracle, rng, budget)
    elif algorithm == "splitsearch":
        res = solve_splitsearch(spec, oracle, budget, rng)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return int(res.answer == oracle.root_value), res.queries


def run_benchmark(grid, trials: int, seed: int, jobs: int | None = 1) -> list[dict]:
    """Success fraction and mean queries per (spec, algorithm, budget) cell."""
    if not grid:
        raise ValueError("benchmark grid is empty")
    for spec, algorithm, budget in grid:
        if algorithm == "shortcircuit" and budget is None and spec.arity**spec.height > UNBOUNDED_LEAF_LIMIT:
            raise ValueError(f"unbounded short-circuit on {spec.arity}**{spec.height} leaves; give a budget")
    jobs = (os.cpu_count() or 1) if jobs is None else jobs
    rows = []
    for cell, (spec, algorithm, budget) in enumerate(grid):
        args = []
        for t in range(trials):
            ss = np.random.SeedSequence([seed, cell, t])
            oseed, rseed = (int(v) for v in ss.generate_state(2))
            args.append((spec.to_dict(), algorithm, budget, oseed, rseed))
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                results = list(pool.map(_trial, args, chunksize=max(1, trials // (4 * jobs))))
        else:
            results = [_trial(a) for a in args]
        wins = sum(r[0] for r in results)
        rows.append({"algorithm": algorithm, "n": spec.n, "k": spec.k, "trials": trials,
                     "budget": -1 if budget is None else int(budget),
                     "success": wins / trials,
                     "mean_queries": sum(r[1] for r in results) / trials, "seed": seed})
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r["algorithm"], r["n"], r["k"], r["trials"], r["budget"],
                         f"{r['success']:.6f}", f"{r['mean_queries']:.6f}", r["seed"]])
    return buf.getvalue()


# --------------------------------------------------------------------------- division process


def constant_strategy(p: float):
    def strategy(tau, A, history):
        return np.full(A.shape, p)
    return strategy


def random_strategy(rng):
    def strategy(tau, A, history):
        return rng.random(A.shape)
    return strategy


def adaptive_strategy(small: float = 0.05, large: float = 0.5):
    """Keep cutting small slices once a small branch has been taken."""
    def strategy(tau, A, history):
        if tau == 0:
            return np.full(A.shape, large)
        took_small = history[:, :tau].any(axis=1)
        return np.where(took_small, small, large)
    return strategy


def targeting_strategy(target: float):
    """Choose each split so the small branch lands just under ``target``."""
    def strategy(tau, A, history):
        return np.clip(target * 0.999 / A, 1e-6, 0.5)
    return strategy


def simulate_division_process(A0: float, m: int, strategy, trials: int, rng, F_values=(0.5,)) -> dict:
    """Empirical Pr[A_m < F*A0] for the random interval-splitting process.

    ``strategy(tau, A, history)`` returns split fractions for every trial,
    where ``history[:, t]`` is true when step ``t`` took the ``p`` branch.
    """
    A = np.full(trials, float(A0))
    history = np.zeros((trials, m), dtype=bool)
    for tau in range(m):
        p = np.clip(np.asarray(strategy(tau, A, history), dtype=float), 0.0, 1.0)
        take = rng.random(trials) < p
        history[:, tau] = take
        A = np.where(take, p * A, (1 - p) * A)
    out = {}
    for F in F_values:
        prob = float(np.mean(A < F * A0))
        out[F] = {"probability": prob, "bound": 2.0**m * F,
                  "sigma": math.sqrt(max(prob * (1 - prob), 1.0 / trials) / trials)}
    return out
