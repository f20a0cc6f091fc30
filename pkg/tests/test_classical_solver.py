import math
import warnings

import numpy as np
import pytest

from faulttree.boolean_tree import EvalTree, LeafOracle, analysis_for, eval_tree, random_k_fault_tree
from faulttree.classical_solver import (CSV_HEADER, adaptive_strategy, constant_strategy,
                                        random_strategy, rows_to_csv, run_benchmark,
                                        simulate_division_process, solve_shortcircuit,
                                        solve_splitsearch, targeting_strategy)
from faulttree.hard_distribution import HardDistSpec, PosteriorTracker, sample_hard_tree
from faulttree.span_program import DirectFunctionSpec

NAND = DirectFunctionSpec.nand()
MAJ = DirectFunctionSpec.majority(3)


def spec_of(n, k=1, fn=NAND):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return HardDistSpec(fn, n, k)


def test_shortcircuit_left_first_example():
    res = solve_shortcircuit(NAND, LeafOracle(2, [1, 1, 1, 1]))
    assert (res.answer, res.queries) == (1, 2)


def test_shortcircuit_forcing_child():
    for other in (0, 1):
        res = solve_shortcircuit(NAND, LeafOracle(2, [0, other]), np.random.default_rng(other))
        assert res.answer == 1 and res.queries <= 2


@pytest.mark.parametrize("fn", [NAND, MAJ])
def test_shortcircuit_is_exact(fn):
    rng = np.random.default_rng(0)
    c = fn.arity
    for _ in range(200):
        depth = int(rng.integers(1, 7 if c == 2 else 4))
        leaves = rng.integers(0, 2, c**depth)
        oracle = LeafOracle(c, leaves)
        res = solve_shortcircuit(fn, oracle, rng)
        assert res.answer == eval_tree(fn, EvalTree(c, depth, leaves))
        assert res.queries == oracle.queries <= c**depth


def test_shortcircuit_budget_falls_back_to_coin():
    tree = random_k_fault_tree(analysis_for(NAND), 8, 2, np.random.default_rng(0))
    oracle = LeafOracle(2, tree.leaves)
    res = solve_shortcircuit(NAND, oracle, np.random.default_rng(1), budget=3)
    assert res.queries <= 3 and res.answer in (0, 1)


def test_splitsearch_small_tree_exact_with_enough_budget():
    spec = spec_of(16)
    wins = 0
    for seed in range(40):
        oracle = sample_hard_tree(spec, seed)
        res = solve_splitsearch(spec, oracle, 30, np.random.default_rng(seed))
        wins += res.answer == oracle.root_value
        assert res.queries == oracle.queries <= 30
    assert wins >= 38


def test_splitsearch_single_query_is_a_coin():
    spec = spec_of(64)
    rows = run_benchmark([(spec, "splitsearch", 1)], 400, 3)
    assert abs(rows[0]["success"] - 0.5) <= 0.075


def test_confidence_trace_within_d_over_s():
    spec = spec_of(64)
    for seed in range(15):
        oracle = sample_hard_tree(spec, seed)
        res = solve_splitsearch(spec, oracle, 24, np.random.default_rng(seed))
        assert len(res.confidence_trace) == len(res.bound_trace)
        for (q, conf), (q2, D, S) in zip(res.confidence_trace, res.bound_trace):
            assert q == q2
            assert conf <= D / S + 1e-12
            assert D <= spec.n0 * q


def test_tracker_confidence_bounded_by_d_over_s_on_random_probes():
    spec = spec_of(12)
    rng = np.random.default_rng(7)
    for seed in range(10):
        oracle = sample_hard_tree(spec, seed)
        tracker = PosteriorTracker(spec)
        for ix in rng.choice(2**12, 10, replace=False):
            path = tuple(int(b) for b in np.binary_repr(int(ix), 12))
            tracker.update(path, oracle.query(path))
            assert tracker.confidence() <= tracker.d_over_s() + 1e-12


def test_splitsearch_two_levels_improves_with_budget():
    spec = spec_of(16, k=2)
    rows = run_benchmark([(spec, "splitsearch", 9), (spec, "splitsearch", 144)], 30, 5)
    assert rows[1]["success"] > rows[0]["success"]
    assert rows[1]["success"] >= 0.9


@pytest.mark.xfail(strict=True, reason=(
    "exact recovery of the gadget depth among n~ = 1022 candidates in 2*ceil(log2 n~) = 20 probes "
    "needs >= 8 bits by Fano, while each probe is a Z-channel on the depth worth <= log2(5/4) bits"))
def test_exact_fault_level_recovery():
    spec = spec_of(1024)
    budget = 2 * math.ceil(math.log2(spec.n_tilde))
    hits = 0
    trials = 50
    for seed in range(trials):
        oracle = sample_hard_tree(spec, 500 + seed)
        res = solve_splitsearch(spec, oracle, budget, np.random.default_rng(seed), stop_when_certain=False)
        hits += res.category == oracle.category(())
    assert hits / trials >= 0.9


def test_benchmark_rows_and_determinism():
    spec = spec_of(16)
    grid = [(spec, "shortcircuit", None), (spec, "splitsearch", 8)]
    a = rows_to_csv(run_benchmark(grid, 12, 9))
    b = rows_to_csv(run_benchmark(grid, 12, 9))
    assert a == b
    lines = a.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    first = dict(zip(CSV_HEADER, lines[1].split(",")))
    assert float(first["success"]) == 1.0 and first["budget"] == "-1"


def test_benchmark_parallel_matches_serial():
    spec = spec_of(16)
    grid = [(spec, "splitsearch", 6)]
    assert run_benchmark(grid, 8, 2, jobs=2) == run_benchmark(grid, 8, 2, jobs=1)


def test_benchmark_rejects_empty_grid_and_unknown_algorithm():
    with pytest.raises(ValueError):
        run_benchmark([], 3, 0)
    with pytest.raises(ValueError):
        run_benchmark([(spec_of(16), "oracle", 3)], 1, 0)
    with pytest.raises(ValueError, match="give a budget"):
        run_benchmark([(spec_of(64), "shortcircuit", None)], 1, 0)


def test_division_constant_half_is_deterministic():
    out = simulate_division_process(1.0, 10, constant_strategy(0.5), 1000, np.random.default_rng(0),
                                    (2.0**-11, 2.0**-10 + 1e-12))
    assert out[2.0**-11]["probability"] == 0.0
    assert out[2.0**-10 + 1e-12]["probability"] == 1.0


def test_division_single_step():
    out = simulate_division_process(1.0, 1, constant_strategy(0.9), 200_000, np.random.default_rng(1),
                                    (0.5,))
    assert out[0.5]["probability"] == pytest.approx(0.1, abs=0.005)


@pytest.mark.parametrize("F", [2.0**-12, 2.0**-15])
def test_division_bound_holds(F):
    rng = np.random.default_rng(2)
    strategies = [constant_strategy(0.5), random_strategy(np.random.default_rng(3)),
                  adaptive_strategy(), targeting_strategy(F)]
    for strategy in strategies:
        row = simulate_division_process(1.0, 10, strategy, 100_000, rng, (F,))[F]
        assert row["probability"] <= row["bound"] + 3 * row["sigma"]
