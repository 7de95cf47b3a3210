"""
Two approximation lemmas, checked numerically
=============================================

The smoothed sum and the raw sum over lattice points of nA differ by an
L2 amount that vanishes after normalisation; for independent fields the
exact value is sqrt(E X^2 sum a_i^2) / n^{d/2}.  The chaining inequality for
band-truncated increments is probed by an empirical constant: the
psi_1-norm of the largest increment divided by the bracket on its right-hand side.
"""

import numpy as np

from setsum import diagnostics as dg
from setsum import laws
from setsum.regions import Quadrant

A = Quadrant((0.7, 0.7))
for n in (8, 16, 32, 64):
    print(n, dg.lemma2_oracle(A, n), dg.lemma2_oracle(A, n, lattice="positive"))
rep = dg.lemma2_check(laws.gaussian(), A, [8, 16, 32], reps=500, seed=2)
for row in rep.rows:
    print(row)

z = np.full(20, 2.0)
print(dg.orlicz_norm(z, "psi1"), 2 / np.log(2))
print(dg.orlicz_norm(z, "psi2"), 2 / np.sqrt(np.log(2)))

sweep = dg.lemma1_sweep(dg.default_lemma1_configs(), [16, 32], reps=100, seed=4)
print("K_hat", sweep.observed, sweep.details["stability"])
