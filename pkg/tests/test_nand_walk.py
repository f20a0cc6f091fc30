import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faulttree.boolean_tree import EvalTree, analysis_for, annotate, node_values, random_k_fault_tree
from faulttree.hard_distribution import trivial_tree
from faulttree.nand_walk import (ResonanceError, WalkError, WalkGraph, build_walk_graph,
                                 gap_scan, graph_root_ratio, hamiltonian_spectrum,
                                 propagate_first_order, propagate_ratios, verify_complexity_rules)
from faulttree.span_program import DirectFunctionSpec

NAND = DirectFunctionSpec.nand()
AN = analysis_for(NAND)


def test_y_gadget_graph():
    g = build_walk_graph(EvalTree(2, 1, [0, 0]))
    assert g.size == 4 and g.edges.shape == (3, 2)
    assert g.is_tree()
    rep = hamiltonian_spectrum(g)
    assert np.allclose(np.sort(rep.eigenvalues), [-np.sqrt(3), 0, 0, np.sqrt(3)], atol=1e-9)


def test_graph_sizes_follow_leaf_convention():
    assert build_walk_graph(EvalTree(2, 2, [0, 0, 0, 0])).size == 8
    # value-1 leaves have no pendant node
    assert build_walk_graph(EvalTree(2, 2, [1, 1, 0, 1])).size == 5
    with pytest.raises(ValueError):
        build_walk_graph(EvalTree(3, 1, [0, 0, 0]))


def test_edgelist_round_trip():
    tree = random_k_fault_tree(AN, 4, 1, np.random.default_rng(0))
    g = build_walk_graph(tree)
    back = WalkGraph.from_edgelist(g.to_edgelist())
    assert np.array_equal(back.positions, g.positions)
    assert np.array_equal(back.edges, g.edges)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_graph_invariants(depth, k, seed):
    tree = random_k_fault_tree(AN, depth, k, np.random.default_rng(seed))
    g = build_walk_graph(tree)
    assert g.is_tree()
    side = g.bipartition()
    assert np.all(side[g.edges[:, 0]] != side[g.edges[:, 1]])
    rep = hamiltonian_spectrum(g)
    assert rep.symmetric
    assert rep.max_residual <= 1e-8
    assert rep.gap > 0


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_graph_matches_ratio_recursion(depth, k, seed):
    tree = random_k_fault_tree(AN, depth, k, np.random.default_rng(seed))
    E = 1e-4
    state = propagate_ratios(tree, E, a_leaf=0.0, b_leaf=1.0)
    assert graph_root_ratio(build_walk_graph(tree), E) == pytest.approx(state.root_ratio, rel=1e-9)
    # sign of the graph ratio carries the root value
    assert (state.root_ratio < 0) == (node_values(NAND, tree)[0] == 0)


def test_eigenvectors_obey_gadget_relation():
    tree = EvalTree(2, 3, [0, 1, 0, 0, 1, 0, 0, 0])
    g = build_walk_graph(tree)
    lam, vec = np.linalg.eigh(g.hamiltonian())
    A = g.adjacency()
    checked = 0
    for j, E in enumerate(lam):
        v = vec[:, j]
        for node in range(g.size - 1):
            nbrs = np.flatnonzero(A[node])
            up = (g.positions[node] - 1) // 2
            parent = g.tail if node == 0 else [u for u in nbrs if g.positions[u] == up][0]
            kids = [u for u in nbrs if u != parent]
            if abs(v[parent]) < 1e-6 or abs(v[node]) < 1e-6 or any(abs(v[u]) < 1e-6 for u in kids):
                continue
            y_kids = sum(v[u] / v[node] for u in kids)
            assert v[node] / v[parent] == pytest.approx(-1.0 / (y_kids + E), rel=1e-6, abs=1e-9)
            checked += 1
    assert checked > 10


def test_gate_cases():
    E = 1e-3
    y00 = propagate_ratios(EvalTree(2, 1, [0, 0]), E).root_ratio
    assert y00 == pytest.approx(E / (2 - E**2), rel=1e-12)
    assert y00 == pytest.approx(E / 2, rel=0.01)
    y11 = propagate_ratios(EvalTree(2, 1, [1, 1]), E).root_ratio
    assert y11 == pytest.approx(-1 / (3 * E), rel=1e-12)
    y10 = propagate_ratios(EvalTree(2, 1, [1, 0]), E).root_ratio
    assert y10 == pytest.approx(E / (1 - 2 * E**2), rel=1e-12)
    assert y10 == pytest.approx(E, rel=0.01)


def test_validity_and_resonance():
    tree = EvalTree(2, 1, [1, 1])
    with pytest.raises(WalkError, match="too large"):
        propagate_ratios(tree, 0.05)
    with pytest.raises(WalkError):
        propagate_ratios(tree, -1e-3)
    # a*E - 1/(b*E) + E = 0 puts E exactly on an eigenvalue
    E, a = 0.01, 1.0
    b = 1.0 / (E**2 * (a + 1))
    with pytest.raises(ResonanceError):
        propagate_ratios(EvalTree(2, 1, [1, 0]), E, a_leaf=a, b_leaf=b, validity=np.inf)


def test_sign_classes_match_values():
    rng = np.random.default_rng(0)
    for _ in range(100):
        tree = random_k_fault_tree(AN, int(rng.integers(1, 11)), int(rng.integers(0, 4)), rng)
        rep = verify_complexity_rules(tree, 1e-6)
        assert rep.sign_matches and rep.root_sign_ok
        assert rep.c_fit <= 2.0


def test_first_order_trivial_tree_does_not_grow():
    for r in (0, 1):
        for depth in range(1, 12):
            comp = propagate_first_order(trivial_tree(NAND, r, depth))
            assert comp.max() <= 2.0 + 1e-12
            assert comp[0] <= 2.0 + 1e-12


def test_exact_trivial_tree_grows_linearly():
    comps = [propagate_ratios(trivial_tree(NAND, 1, d), 1e-6).complexity[0] for d in (4, 8, 12)]
    assert comps[0] < comps[1] < comps[2]
    assert comps[2] <= 12


def _fault_layer(depth, height):
    """Trivial tree with root value 1 where every value-1 node at ``height`` becomes a {10} fault."""
    tree = trivial_tree(NAND, 1, depth)
    leaves = tree.leaves.reshape(-1, 2**height).copy()
    vals = node_values(NAND, tree)
    lvl = depth - height
    level_vals = vals[2**lvl - 1:2**(lvl + 1) - 1]
    assert np.all(level_vals == 1)
    # the right input becomes the value-1 sibling of a {00} input
    ones = trivial_tree(NAND, 1, height - 1).leaves
    leaves[:, 2**(height - 1):] = ones
    return EvalTree(2, depth, leaves.ravel())


def test_fault_layer_doubles_first_order_complexity():
    base = propagate_first_order(trivial_tree(NAND, 1, 6))[0]
    layer = _fault_layer(6, 2)
    ann = annotate(AN, layer)
    assert ann.kappa[0] == 1
    assert propagate_first_order(layer)[0] == pytest.approx(2 * base, rel=1e-12)


def test_single_fault_at_most_doubles():
    depth, height = 6, 2
    base = propagate_first_order(trivial_tree(NAND, 1, depth))[0]
    tree = trivial_tree(NAND, 1, depth)
    leaves = tree.leaves.copy()
    leaves[2**height - 2**(height - 1):2**height] = trivial_tree(NAND, 1, height - 1).leaves
    single = EvalTree(2, depth, leaves)
    assert annotate(AN, single).kappa[0] == 1
    ratio = propagate_first_order(single)[0] / base
    assert 1.0 < ratio <= 2.0


def test_richardson_first_order_accuracy():
    rng = np.random.default_rng(1)
    for _ in range(20):
        tree = random_k_fault_tree(AN, int(rng.integers(2, 9)), int(rng.integers(0, 3)), rng)
        E = 1e-4
        c1 = propagate_ratios(tree, E).complexity
        c2 = propagate_ratios(tree, E / 2).complexity
        assert np.allclose(c1, c2, rtol=0.05)


def test_gap_scan_rows():
    rows = gap_scan([2, 3], [0, 1], 2, seed=0)
    assert len(rows) == 8
    for row in rows:
        assert row["kappa"] <= row["k"]
        assert row["scaled"] == pytest.approx(row["gap"] * row["depth"]**2 * 2**row["k"])


def test_spectrum_csv():
    rep = hamiltonian_spectrum(build_walk_graph(EvalTree(2, 1, [0, 0])))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "eigenvalue,root_support"
    assert len(lines) == 5
