"""
Classical evaluation under a query budget
=========================================

Short-circuit evaluation is exact but reads many leaves.  Split search
hunts for the hidden gadget depth with a noisy binary search.
"""

import math
import warnings

import numpy as np

from faulttree import DirectFunctionSpec, HardDistSpec, run_benchmark, simulate_division_process
from faulttree.classical_solver import constant_strategy, random_strategy, rows_to_csv

warnings.simplefilter("ignore")
small = HardDistSpec(DirectFunctionSpec.nand(), 12)
print(rows_to_csv(run_benchmark([(small, "shortcircuit", None)], trials=20, seed=1)))

spec = HardDistSpec(DirectFunctionSpec.nand(), 64)
top = 4 * math.ceil(math.log2(spec.n_tilde))
grid = [(spec, "shortcircuit", top)] + [(spec, "splitsearch", b) for b in (1, 4, 8, 16, top)]
print(rows_to_csv(run_benchmark(grid, trials=40, seed=1)))

# the interval-splitting process behind the lower bound
rng = np.random.default_rng(0)
for name, strategy in (("half", constant_strategy(0.5)), ("random", random_strategy(rng))):
    row = simulate_division_process(1.0, 10, strategy, 100_000, rng, (2.0**-12,))[2.0**-12]
    print(f"{name:>6}: Pr[A_10 < 2^-12] = {row['probability']:.4f}  (bound {row['bound']:.4f})")
