"""
Gaussian limit of the set-indexed process
=========================================

For i.i.d. finite-variance fields, n^{-d/2} S_n(A) is close to N(0, E X^2 lambda(A))
and the covariance of two sets is E X^2 lambda(A cap B).  The same holds for
the bounded martingale-difference field when normalised by its empirical
second moment.
"""

import numpy as np

from setsum import diagnostics as dg
from setsum import laws
from setsum.regions import Quadrant, intersection_measure

A, B = Quadrant((0.5, 1.0)), Quadrant((1.0, 0.5))
C = Quadrant((0.5, 0.5))

plan = dg.ExperimentPlan(laws.gaussian(), d=2, n=32, regions=(A, B, C), reps=1000, seed=1)
evs = dg.run_replications(plan)
vals = np.array([e.normalized for e in evs])

print(dg.fidi_gaussian_test(vals[:, 2], 0.25, name="fidi quadrant(0.5,0.5)").summary())
print(dg.covariance_check(vals[:, 0], vals[:, 1], intersection_measure(A, B)).summary())

md = dg.ExperimentPlan(laws.md_bounded(), d=2, n=32, regions=(C,), reps=1000, seed=1)
evs = dg.run_replications(md)
v = np.mean([e.extra["mean_sq"] for e in evs])
print("md field E X^2 ~", round(v, 4))
print(dg.fidi_gaussian_test([e.normalized[0] for e in evs], v * 0.25, name="fidi md").summary())
