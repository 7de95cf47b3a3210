"""
Lattice fields, regions and smoothed partial sums
=================================================

A field lives on {1..n}^d.  A region A inside [0,1]^d is blown up to nA and
each site i gets the weight lambda(nA cap R_i), the part of its unit cell
covered by nA.  The weighted sum of the field is S_n(A).
"""

import numpy as np

from setsum import laws
from setsum.fields import sample_field
from setsum.process import gamma_sum, partial_sum
from setsum.regions import CellUnion, Quadrant, parse_region, rho, weight_grid

# weights of a quadrant whose corner does not sit on the grid
A = Quadrant((0.3, 0.55))
w = weight_grid(A, 8).weights
print(np.round(w, 2))
print("sum of weights", w.sum(), "= n^2 lambda(A) =", 64 * 0.3 * 0.55)

# same seed, same field, whatever the thread count or block size
fld = sample_field(laws.gaussian(), d=2, n=8, seed=42)
print("S_n(A) =", partial_sum(fld, A), " raw sum over nA =", gamma_sum(fld, A))

# the distance between sets is sqrt(lambda(A delta B))
B = parse_region("cells:m=4:[(1,1),(1,2),(2,1)]")
print("rho(A, B) =", rho(A, B))
print("rho(A, A) =", rho(A, A))

# a martingale-difference field: conditional scale depends on the lexicographic past
md = sample_field(laws.md_bounded(laws.rademacher(), a=0.5, w=1), d=2, n=8, seed=42)
print("sigma range", md.cond_std.min(), md.cond_std.max())
print("disjoint cells add:",
      partial_sum(md, CellUnion(2, ((1, 1), (2, 2)))),
      partial_sum(md, CellUnion(2, ((1, 1),))) + partial_sum(md, CellUnion(2, ((2, 2),))))
