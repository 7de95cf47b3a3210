"""Covering numbers, entropy profiles and the counterexample entropy series."""

from dataclasses import dataclass
import csv
import io
import math

import numpy as np
from scipy import optimize, sparse

from .regions import counterexample_params, counterexample_sequences, rho_matrix


def _ball_matrix(regions, eps):
    # open balls: B(c, eps) = {A : rho(A, c) < eps}
    return rho_matrix(regions) < eps


def greedy_cover(regions, eps):
    """Number of open ``eps``-balls (centres in the class) picked by greedy set cover.

    At each step the centre covering the most uncovered members is chosen,
    ties going to the earliest in input order.  The count is within a
    ``1 + ln |class|`` factor of the minimum.
    """
    if not regions:
        return 0
    cover = _ball_matrix(regions, eps)
    uncovered = np.ones(len(regions), dtype=bool)
    count = 0
    while uncovered.any():
        gain = (cover & uncovered).sum(axis=1)
        best = int(np.argmax(gain))
        uncovered &= ~cover[best]
        count += 1
    return count


def exact_cover(regions, eps):
    """Minimum number of open ``eps``-balls centred in the class (0-1 integer program)."""
    k = len(regions)
    if k == 0:
        return 0
    cover = sparse.csr_matrix(_ball_matrix(regions, eps).astype(float))
    res = optimize.milp(
        c=np.ones(k),
        constraints=optimize.LinearConstraint(cover, lb=np.ones(k), ub=np.inf),
        integrality=np.ones(k),
        bounds=optimize.Bounds(0, 1),
    )
    if not res.success:
        raise RuntimeError(f"set-cover program failed: {res.message}")
    return int(round(res.fun))


@dataclass(frozen=True, eq=False)
class EntropyProfile:
    eps_grid: np.ndarray
    logN: np.ndarray
    source: str

    def __post_init__(self):
        eps = np.asarray(self.eps_grid, dtype=float)
        logn = np.asarray(self.logN, dtype=float)
        if eps.ndim != 1 or eps.shape != logn.shape or eps.size == 0:
            raise ValueError("eps_grid and logN must be equal-length nonempty vectors")
        if np.any(np.diff(eps) >= 0) or eps[0] > 1 or eps[-1] <= 0:
            raise ValueError("eps_grid must be strictly decreasing inside (0, 1]")
        if self.source not in ("greedy_empirical", "analytic_bound"):
            raise ValueError(f"unknown profile source {self.source!r}")
        # monotone envelope: log N can only grow as eps shrinks
        logn = np.maximum.accumulate(np.maximum(logn, 0.0))
        object.__setattr__(self, "eps_grid", eps)
        object.__setattr__(self, "logN", logn)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "logN", "source"])
        for e, h in zip(self.eps_grid, self.logN):
            w.writerow([repr(float(e)), repr(float(h)), self.source])
        return buf.getvalue()


def empirical_profile(regions, eps_grid):
    """Greedy covering profile of a finite class."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    logn = [math.log(greedy_cover(regions, e)) for e in eps_grid]
    return EntropyProfile(eps_grid, np.array(logn), "greedy_empirical")


def quadrant_bracketing_profile(d, eps_grid):
    """Analytic bracketing bound for lower-left quadrants.

    Corners rounded down/up on a mesh ``h`` with ``d*h <= eps^2`` bracket every
    quadrant, giving ``log N <= d log(ceil(d/eps^2) + 1)``.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    logn = d * np.log(np.ceil(d / eps_grid ** 2) + 1.0)
    return EntropyProfile(eps_grid, logn, "analytic_bound")


@dataclass(frozen=True)
class EntropyIntegral:
    value: float
    lower: float  # 0.0 when the profile was extended down to 0


def entropy_integral(profile):
    """Trapezoid integral of ``sqrt(log N)`` over the profile's eps range.

    When the two smallest-eps values agree the profile is taken as flat below
    and extended to 0; otherwise the integral stops at the smallest eps.
    """
    eps = profile.eps_grid[::-1]
    root = np.sqrt(profile.logN[::-1])
    value = float(np.trapezoid(root, eps)) if eps.size > 1 else 0.0
    flat = eps.size == 1 or root[0] == root[1]
    if flat:
        return EntropyIntegral(value + float(eps[0] * root[0]), 0.0)
    return EntropyIntegral(value, float(eps[0]))


def counterexample_entropy_bound(params, r=None):
    """``(log(1 + 2 r n_r^(d k_r)), 3 d k_r log n_r)`` evaluated in log space."""
    if r is not None and r != params.r:
        params = counterexample_params(params.p, params.d, r)
    r = params.r
    log_n = math.log(params.n)
    exact = float(np.logaddexp(0.0, math.log(2 * r) + params.d * params.k * log_n))
    return exact, 3.0 * params.d * params.k * log_n


@dataclass(frozen=True, eq=False)
class CounterexampleSeries:
    r: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    majorant: np.ndarray
    majorant_constant: float


def counterexample_series(p, d, R):
    """Terms ``eps_(r-1) sqrt(3 d k_r log n_r)`` for ``r = 2..R`` and their partial sums.

    ``majorant`` is ``K sqrt(r) / 2^(rd)`` with the smallest ``K`` dominating the terms.
    """
    if R < 2:
        raise ValueError("R must be >= 2")
    rs = np.arange(2, R + 1)
    terms = []
    for r in rs:
        eps_prev = counterexample_sequences(p, d, int(r) - 1)[3]
        n, _, k, _ = counterexample_sequences(p, d, int(r))
        terms.append(eps_prev * math.sqrt(3.0 * d * k * math.log(n)))
    terms = np.array(terms)
    shape = np.sqrt(rs) / 2.0 ** (rs * d)
    K = float(np.max(terms / shape))
    return CounterexampleSeries(rs, terms, np.cumsum(terms), K * shape, K)
