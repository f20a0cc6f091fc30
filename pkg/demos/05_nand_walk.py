"""
NAND trees as quantum-walk graphs
=================================

Every NAND gate becomes a Y-shaped gadget.  Eigenvector ratios travel up
the tree as y_parent = -1/(y_left + y_right + E); their sign reads off the
node value and their size (the complexity) sets how small E must be.
"""

import numpy as np

from faulttree import (DirectFunctionSpec, EvalTree, analysis_for, build_walk_graph,
                       hamiltonian_spectrum, propagate_first_order, propagate_ratios,
                       random_k_fault_tree)
from faulttree.nand_walk import gap_scan, graph_root_ratio

y = hamiltonian_spectrum(build_walk_graph(EvalTree(2, 1, [0, 0])))
print("Y gadget spectrum:", np.round(y.eigenvalues, 6))

E = 1e-3
for leaves in ([0, 0], [1, 1], [1, 0]):
    print(f"inputs {leaves}: y0 = {propagate_ratios(EvalTree(2, 1, leaves), E).root_ratio:+.6g}")

# the graph realizes the recursion when value-1 leaves are left out
tree = random_k_fault_tree(analysis_for(DirectFunctionSpec.nand()), 6, 2, np.random.default_rng(3))
print("graph vs recursion:", graph_root_ratio(build_walk_graph(tree), 1e-4),
      propagate_ratios(tree, 1e-4, a_leaf=0.0).root_ratio)
print("first-order root complexity:", propagate_first_order(tree)[0])

# the root-supported gap shrinks slowly with depth and fault count
rows = gap_scan([2, 4, 6, 8], [0, 2], samples=3, seed=0)
for d in (2, 4, 6, 8):
    gaps = [min(r["gap"] for r in rows if r["depth"] == d and r["k"] == k) for k in (0, 2)]
    print(f"depth {d}: min gap k=0 {gaps[0]:.3f}, k=2 {gaps[1]:.3f}")
