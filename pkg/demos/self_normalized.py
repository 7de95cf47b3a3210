"""
Self-normalised sums with infinite variance
===========================================

The symmetric Pareto law with tail index 2 has infinite variance but lies in
the domain of attraction of the normal law.  Dividing S_n(A) by
U_n = sqrt(sum X_i^2) restores a N(0, lambda(A)) limit, and U_n^2 / b_n^2
concentrates (slowly) near 1, with b_n solving b^2 = n E[X^2 1{|X| < b}].
"""

import numpy as np

from setsum import diagnostics as dg
from setsum import laws
from setsum.fields import sample_field
from setsum.process import evaluate, norming_constant, t_statistics
from setsum.regions import Quadrant
from setsum.rng import replication_seed

law = laws.pareto_tail(2.0)
A = Quadrant((0.5,))
z, t2 = [], []
for j in range(500):
    fld = sample_field(law, 1, 4096, replication_seed(3, j))
    z.append(evaluate(fld, [A], "self").normalized[0])
    t2.append(t_statistics(fld, A)[1])
print(dg.fidi_gaussian_test(z, 0.5, name="self-normalised KS").summary())
print("median T_n2^2:", np.median(t2))

# scaling the field leaves the self-normalised statistic unchanged
fld = sample_field(law, 1, 4096, 99)
print(evaluate(fld, [A], "self").normalized[0], evaluate(fld.scaled(1e3), [A], "self").normalized[0])

for n in (10**3, 10**5, 10**7):
    b = norming_constant(law, 1, n)
    print(f"n={n:>9}  b_n={b:12.3f}  b_n/sqrt(n)={b / np.sqrt(n):.4f}")
print(dg.raikov_check(law, 1, 10**5, 100, seed=3).summary())
