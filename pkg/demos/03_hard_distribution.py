"""
A hard input distribution and its posterior
===========================================

Each block is a trivial tree, one layer of small gadgets at a random depth
i, then trivial trees again.  The gadget depth is hidden; one leaf alone
says nothing about the root.
"""

import warnings

import numpy as np

from faulttree import DirectFunctionSpec, HardDistSpec, PosteriorTracker, sample_hard_tree

warnings.simplefilter("ignore")
spec = HardDistSpec(DirectFunctionSpec.nand(), 32)
print(f"n={spec.n}, gadget height n0={spec.n0}, gadget faults k0={spec.k0}, categories={spec.n_tilde}")

oracle = sample_hard_tree(spec, seed=7)
print("hidden gadget depth:", oracle.category(()), " root:", oracle.root_value)

tracker = PosteriorTracker(spec)
ref = (0,) * spec.n
probes = [ref] + [ref[:h] + (1,) + ref[h + 1:] for h in (16, 8, 24, 4, 12, 20, 28)]
for path in probes:
    bit = oracle.query(path)
    tracker.update(path, bit)
    post = tracker.category_posterior()
    print(f"queries={oracle.queries:2d}  bit={bit}  P(root=1)={tracker.root_posterior():.3f}  "
          f"live categories={int((post > 0).sum()):2d}  D/S={tracker.d_over_s():.3f}")
