"""
Covering numbers and the entropy series
=======================================

Greedy set cover gives an upper bound for the covering number of a finite
class; a 0-1 integer program gives the exact minimum.  For the
counterexample classes the entropy integral reduces to a series whose terms
decay like sqrt(r) 2^(-rd).
"""

import numpy as np

from setsum import entropy as en
from setsum.regions import class_enumerate, counterexample_params

grid = class_enumerate("quadrant_grid", 64)
for eps in (0.5, 0.25, 0.125):
    print(f"eps={eps}: greedy={en.greedy_cover(grid, eps)} exact={en.exact_cover(grid, eps)}")

eps = np.array([0.5, 0.25, 0.125, 0.0625])
print(en.empirical_profile(class_enumerate("quadrant_grid", 256), eps).to_csv())
print(en.quadrant_bracketing_profile(1, eps).to_csv())

s = en.counterexample_series(1, 1, 30)
print("partial sums:", np.round(s.partial_sums[[0, 4, 9, 18, -1]], 6))
print("majorant constant", s.majorant_constant)
for r in (2, 10, 30):
    print(r, en.counterexample_entropy_bound(counterexample_params(1, 1, r)))
