"""
Span programs and witness sizes
===============================

A direct boolean function gets one input vector per input bit.  The
witness size of an input measures how costly it is to certify the output;
inputs costing 1 are trivial, everything else is a fault.
"""

import numpy as np

from faulttree import DirectFunctionSpec, analyze_spec, witness_size
from faulttree.span_program import input_bits

# NAND is a negated 2-threshold: one row (1, 1), both labels complemented
nand = analyze_spec(DirectFunctionSpec.nand())
print("NAND program rows:", nand.program.matrix.tolist(), "polarity:", nand.program.polarity)
for bits, row in nand.per_input().items():
    kind = "trivial" if row["trivial"] else "fault"
    print(f"  x={bits}  f={row['value']}  wsize={row['wsize']:.3f}  {kind}  strong={row['strong']}")
print("omega(NAND) =", round(nand.omega, 9))

# Majority of three uses Vandermonde columns (1, a) for a = 1, 2, 3
maj = analyze_spec(DirectFunctionSpec.majority(3))
print("\n3-MAJ omega =", round(maj.omega, 6))
print("trivial inputs:", [b for b, r in maj.per_input().items() if r["trivial"]])

# costs on weak inputs (label disagrees with the output) never matter
p = maj.program
x = input_bits(0b110, 3)
weak = p.chi(x) != maj.values[0b110]
costs = np.ones(3)
costs[weak] = 50.0
print("wsize of 110 with unit / inflated weak costs:",
      round(witness_size(p, x).value, 9), round(witness_size(p, x, costs).value, 9))
