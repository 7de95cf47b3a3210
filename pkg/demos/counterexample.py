"""
A field whose partial-sum process is not tight
==============================================

With P(|X| >= k) = k^-(p+1) the variance is finite only for p >= 2.  At
n_r = 4^(rp), on the event W_r that at least k_r sites exceed beta_r = 2^(rd),
the cells of those sites form a set of tiny measure whose normalised sum is at
least 1/2.  The frequency of that event matches the exact binomial tail and
does not shrink with r.
"""

from setsum import diagnostics as dg
from setsum.regions import counterexample_params

for r in range(2, 8):
    params = counterexample_params(1, 1, r)
    print(f"r={r} n_r={params.n:>6} beta_r={params.beta:>4} k_r={params.k} "
          f"P(W_r)={dg.wr_exact_probability(params):.5f}")

rep = dg.counterexample_experiment(p=1, d=1, rs=[2, 3, 4], reps=1000, seed=7)
for row in rep.rows:
    print(row)
print(rep.verdict)
