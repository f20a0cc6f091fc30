"""
Counting faults in a formula tree
=================================

kappa counts faults along strong paths.  A k-fault tree keeps kappa <= k
everywhere, and its cost bound grows like omega**k instead of with the
number of faults.
"""

import numpy as np

from faulttree import (ComplexityParams, DirectFunctionSpec, analysis_for, annotate,
                       complexity_bound, query_estimate, random_k_fault_tree)

nand = analysis_for(DirectFunctionSpec.nand())
rng = np.random.default_rng(0)

for k in range(4):
    tree = random_k_fault_tree(nand, 8, k, rng)
    ann = annotate(nand, tree)
    rep = complexity_bound(nand, ann, k=k)
    print(f"k={k}: root value {ann.values[0]}, kappa(root)={ann.kappa[0]}, "
          f"faults={int((~ann.trivial).sum())}, root z={rep.root:.2f}, "
          f"bound={rep.bound[0]:.2f}, violations={rep.violations.size}")

# the query estimate n^2 omega^k / c with the unit energy constant
unit = ComplexityParams(c_energy=1.0)
print("\nn=4, k=1:", query_estimate(4, 1, 2.0, unit))
print("n=8, k=3:", query_estimate(8, 3, 2.0, unit))
