"""Monte Carlo replication engine and statistical verdicts."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
import math
import time

import numpy as np
from scipy import special, stats

from . import laws as _laws
from .fields import TruncationPiece, sample_field
from .process import (SparseWeights, evaluate, modulus, norming_sequence,
                      truncated_piece_process)
from .regions import (Empty, Quadrant, adaptive_region, class_enumerate, counterexample_params,
                      lattice_members, rho_matrix, weight_grid)
from .rng import replication_seed

DEFAULT_CAP = 10 ** 9


@dataclass(frozen=True)
class ExperimentPlan:
    law: _laws.LawSpec
    d: int
    n: int
    regions: tuple
    normalization: str = "standard"
    reps: int = 1000
    seed: int = 0
    threads: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class TestReport:
    """Outcome of one statistical check.

    ``sided`` selects the acceptance rule: ``two`` (``|obs - target| <= tol``),
    ``upper`` (``obs <= target + tol``), ``lower`` (``obs >= target - tol``) or
    ``ratio`` (``|log(obs / target)| <= log(1 + tol)``).
    """

    __test__ = False  # not a pytest class

    name: str
    observed: float
    target: float
    tolerance: float
    se: "float | None" = None
    verdict: str = ""
    runtime: float = 0.0
    seed: "int | None" = None
    sided: str = "two"
    rows: list = dc_field(default_factory=list)
    details: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.verdict:
            self.verdict = judge(self.observed, self.target, self.tolerance, self.se, self.sided)

    @property
    def passed(self):
        return self.verdict == "pass"

    def summary(self):
        return {
            "name": self.name,
            "observed": float(self.observed),
            "target": float(self.target),
            "tolerance": float(self.tolerance),
            "se": None if self.se is None else float(self.se),
            "verdict": self.verdict,
            "sided": self.sided,
            "seed": self.seed,
            "details": self.details,
        }


def judge(observed, target, tol, se=None, sided="two"):
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if se is not None and se > tol / 2:
        return "inconclusive"
    if not math.isfinite(observed):
        return "fail"
    if sided == "two":
        ok = abs(observed - target) <= tol
    elif sided == "upper":
        ok = observed <= target + tol
    elif sided == "lower":
        ok = observed >= target - tol
    elif sided == "ratio":
        ok = observed > 0 and abs(math.log(observed / target)) <= math.log1p(tol)
    else:
        raise ValueError(f"unknown sidedness {sided!r}")
    return "pass" if ok else "fail"


def pmap(func, items, threads=1):
    """Order-preserving map, optionally over a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _check_cap(sites, reps, cap):
    if sites * reps > cap:
        raise ValueError(f"n^d * R = {sites * reps} exceeds the resource cap {cap}")


def run_replications(plan):
    """One ``ProcessEvaluation`` per replication; replication ``j`` uses seed ``(plan.seed, j)``."""
    _check_cap(plan.n ** plan.d, plan.reps, plan.cap)
    weights = [SparseWeights(reg, plan.n) for reg in plan.regions]
    norming = None
    if plan.normalization == "norming":
        norming = norming_sequence(plan.law, plan.d, [plan.n]).table[0][1]

    def one(j):
        fld = sample_field(plan.law, plan.d, plan.n, replication_seed(plan.seed, j))
        ev = evaluate(fld, plan.regions, plan.normalization, weights, norming)
        ev.extra["mean_sq"] = _sum_sq(fld) / fld.flat.size
        return ev

    return pmap(one, range(plan.reps), plan.threads)


def ks_tolerance(reps):
    return 1.36 / math.sqrt(reps) + 0.03


def fidi_gaussian_test(samples, variance, tol=None, name="fidi_ks", seed=None):
    """KS distance between ``samples / sqrt(variance)`` and N(0, 1)."""
    t0 = time.perf_counter()
    x = np.asarray(samples, dtype=float)
    if x.size < 200:
        raise ValueError("fidi test needs at least 200 samples")
    if not variance > 0:
        raise ValueError("variance target must be positive")
    if np.isnan(x).any():
        raise ValueError("samples contain undefined values")
    ks = stats.kstest(x / math.sqrt(variance), "norm").statistic
    tol = ks_tolerance(x.size) if tol is None else tol
    return TestReport(name, float(ks), 0.0, tol, sided="upper", seed=seed,
                      runtime=time.perf_counter() - t0,
                      details={"variance": float(variance), "samples": int(x.size)})


def covariance_check(x, y, target, tol=1e-12, name="covariance", seed=None):
    """Sample covariance against ``target``; passes within ``3 SE + tol``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("paired samples of equal length >= 2 required")
    prod = (x - x.mean()) * (y - y.mean())
    cov = prod.sum() / (x.size - 1)
    se = prod.std(ddof=1) / math.sqrt(x.size)
    return TestReport(name, float(cov), float(target), 3.0 * se + tol, se=float(se), seed=seed,
                      details={"mc_se_multiplier": 3.0, "slack": tol})


def raikov_check(law, d, n, reps, seed=0, threads=1, band=0.25, cap=DEFAULT_CAP):
    """Median of ``U_n^2 / b_n^2`` across replications; passes within ``[1/(1+band), 1+band]``."""
    t0 = time.perf_counter()
    _check_cap(n ** d, reps, cap)
    seq = norming_sequence(law, d, [n])
    _, b, b_sq = seq.table[0]

    # b_n^2 is kept unrounded so that a rademacher field gives exactly n^d / n^d
    def one(j):
        return _sum_sq(sample_field(law, d, n, replication_seed(seed, j))) / b_sq

    ratios = np.array(pmap(one, range(reps), threads))
    med = float(np.median(ratios))
    far = float(np.mean(np.abs(ratios - 1.0) > 0.25))
    return TestReport("raikov_median", med, 1.0, band, sided="ratio", seed=seed,
                      runtime=time.perf_counter() - t0,
                      details={"b_n": b, "b_n_sq": b_sq, "residual": seq.residuals[0],
                               "freq_far": far, "n": n, "d": d, "reps": reps,
                               "min_ratio": float(ratios.min()), "max_ratio": float(ratios.max())})


def _sum_sq(fld):
    v = fld.flat
    return math.fsum(v * v)


def lemma2_oracle(region, n, second_moment=1.0, lattice="full"):
    """Exact ``n^{-d/2} || S_n(A) - S_Gamma ||_2`` for an independent field with ``E X^2 = second_moment``.

    Uses ``a_i = lambda(nA cap R_i) - 1{i in Gamma_n(A)}`` over every site that
    either side touches.
    """
    d = region.d
    side = n + 1 if lattice == "full" else n
    off = 0 if lattice == "full" else 1
    a = np.zeros((side,) * d)
    inner = tuple(slice(1 - off, None) for _ in range(d))
    a[inner] += weight_grid(region, n).weights
    g = lattice_members(region, n, lattice) - off
    if g.size:
        a[tuple(g.T)] -= 1.0
    return math.sqrt(second_moment * math.fsum((a * a).ravel())) / n ** (d / 2.0)


def lemma2_check(law, region, ladder, reps, seed=0, lattice="full", final_tol=0.35,
                 threads=1, cap=DEFAULT_CAP):
    """Monte Carlo ``n^{-d/2} || S_n(A) - S_Gamma ||_2`` along an ``n`` ladder.

    Passes when every estimate lies within 3 MC standard errors of the exact
    value, the estimates do not increase beyond MC noise, and the last one is
    below ``final_tol``.  ``lattice="full"`` takes ``Gamma_n(A) = nA cap Z^d``
    (sites with a zero coordinate are simulated too); ``"positive"`` restricts
    it to {1..n}^d.
    """
    t0 = time.perf_counter()
    if not law.is_iid:
        raise ValueError("lemma2_check needs an i.i.d. law")
    m2 = _laws.second_moment(law)
    if not math.isfinite(m2):
        raise ValueError("lemma2_check needs a finite-variance law")
    d = region.d
    off = 0 if lattice == "full" else 1
    rows = []
    for n in ladder:
        side = n + 1 if lattice == "full" else n
        _check_cap(side ** d, reps, cap)
        weights = SparseWeights(region, n)
        gamma = tuple((lattice_members(region, n, lattice) - off).T)
        inner = tuple(slice(1 - off, None) for _ in range(d))
        scale = n ** (d / 2.0)

        def one(j, n=n, side=side, weights=weights, gamma=gamma, inner=inner, scale=scale):
            vals = sample_field(law, d, side, replication_seed(seed, n, j)).values
            smooth = weights.apply(np.ascontiguousarray(vals[inner]).ravel())
            return (smooth - math.fsum(vals[gamma])) / scale

        diffs = np.array(pmap(one, range(reps), threads))
        sq = diffs * diffs
        est = math.sqrt(sq.mean())
        se = sq.std(ddof=1) / math.sqrt(reps) / (2.0 * est) if est > 0 else 0.0
        oracle = lemma2_oracle(region, n, m2, lattice)
        ok = abs(est - oracle) <= 3.0 * se if se > 0 else abs(est - oracle) <= 1e-12
        rows.append({"n": n, "estimate": est, "se": float(se), "oracle": oracle,
                     "verdict": "pass" if ok else "fail"})
    monotone = all(b["estimate"] <= a["estimate"] + 3.0 * math.hypot(a["se"], b["se"])
                   for a, b in zip(rows, rows[1:]))
    agree = all(r["verdict"] == "pass" for r in rows)
    final = rows[-1]["estimate"]
    verdict = "pass" if (agree and monotone and final < final_tol) else "fail"
    return TestReport("lemma2_l2_gap", final, 0.0, final_tol, se=None, verdict=verdict,
                      sided="upper", seed=seed, rows=rows, runtime=time.perf_counter() - t0,
                      details={"lattice": lattice, "agree": agree, "monotone": monotone,
                               "oracle_decreasing": all(b["oracle"] < a["oracle"]
                                                        for a, b in zip(rows, rows[1:]))})


def _psi(kind):
    if kind in ("psi1", 1):
        return lambda x: np.expm1(x)
    if kind in ("psi2", 2):
        return lambda x: np.expm1(x * x)
    raise ValueError(f"unknown Young function {kind!r}")


def orlicz_norm(samples, psi="psi1", rtol=1e-12):
    """Empirical Luxemburg norm ``inf{c > 0 : mean psi(|Z|/c) <= 1}`` by bisection."""
    z = np.abs(np.asarray(samples, dtype=float)).ravel()
    if z.size == 0:
        raise ValueError("need at least one sample")
    f = _psi(psi)
    top = z.max()
    if top == 0:
        return 0.0

    def excess(c):
        with np.errstate(over="ignore"):
            return f(z / c).mean() - 1.0

    hi = top
    while excess(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0
    while excess(lo) <= 0:
        lo /= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def psi1_inv(y):
    return math.log1p(y)


def psi2_inv(y):
    return math.sqrt(math.log1p(y))


@dataclass(frozen=True)
class Lemma1Config:
    name: str
    law: _laws.LawSpec
    g1: tuple
    g2: tuple
    tau: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0
    d: int = 1


def lemma1_ratio(cfg, n, reps, seed=0, threads=1):
    """Empirical ``K``: psi1-norm of the max band-process increment over ``G1 x G2`` divided by
    ``beta tau psi1^{-1}(|G|) + max rho psi2^{-1}(|G|)``, with ``c_n = n^{d/2}``."""
    t0 = time.perf_counter()
    d = cfg.d
    c_n = n ** (d / 2.0)
    piece = TruncationPiece(cfg.tau, c_n, cfg.alpha, cfg.beta)
    regions = list(dict.fromkeys(cfg.g1 + cfg.g2))
    pos = {r: i for i, r in enumerate(regions)}
    pairs = [(pos[a], pos[b]) for a in cfg.g1 for b in cfg.g2]
    dist = rho_matrix(regions)
    max_rho = max(dist[i, j] for i, j in pairs)
    size = len(pairs)
    bracket = cfg.beta * cfg.tau * psi1_inv(size) + max_rho * psi2_inv(size)
    centering = "conditional-mean" if cfg.law.kind == "md" else "mean"

    def one(j):
        fld = sample_field(cfg.law, d, n, replication_seed(seed, n, j))
        theta = [truncated_piece_process(fld, reg, piece, centering) for reg in regions]
        return max(abs(theta[i] - theta[k]) for i, k in pairs)

    maxima = np.array(pmap(one, range(reps), threads))
    norm = orlicz_norm(maxima, "psi1")
    ratio = float(norm / bracket) if bracket > 0 else (0.0 if norm == 0 else math.inf)
    return {"config": cfg.name, "n": n, "psi1_norm": norm, "bracket": bracket,
            "ratio": ratio, "pairs": size, "max_rho": max_rho,
            "runtime": time.perf_counter() - t0}


def lemma1_sweep(configs, ns, reps, seed=0, threads=1, k_bound=50.0, stability_bound=3.0):
    """Run ``lemma1_ratio`` over ``configs x ns``; passes when the largest ratio is finite,
    at most ``k_bound``, and max/min over ``ns`` stays below ``stability_bound`` per config."""
    t0 = time.perf_counter()
    rows = [lemma1_ratio(cfg, n, reps, seed, threads) for cfg in configs for n in ns]
    for r in rows:
        r.pop("runtime")
    k_hat = max(r["ratio"] for r in rows)
    stability = {}
    for cfg in configs:
        vals = [r["ratio"] for r in rows if r["config"] == cfg.name]
        lo = min(vals)
        stability[cfg.name] = float(max(vals) / lo) if lo > 0 else math.inf
    worst = max(stability.values())
    ok = math.isfinite(k_hat) and k_hat <= k_bound and worst < stability_bound
    return TestReport("lemma1_k_hat", k_hat, 0.0, k_bound, sided="upper", seed=seed,
                      verdict="pass" if ok else "fail", rows=rows,
                      runtime=time.perf_counter() - t0,
                      details={"stability": stability, "worst_stability": worst,
                               "stability_bound": stability_bound})


def default_lemma1_configs():
    """Four base configurations (d = 1) used by the 12-run sweep over n in {16, 32, 64}."""
    grid = tuple(class_enumerate("quadrant_grid", 4))
    q = lambda t: Quadrant((t,))  # noqa: E731
    return [
        Lemma1Config("rademacher_pair_full", _laws.rademacher(), (q(0.5),), (q(0.75),)),
        Lemma1Config("gaussian_grid_full", _laws.gaussian(), grid, grid),
        Lemma1Config("md_grid_full", _laws.md_bounded(_laws.rademacher(), 0.5, 1), grid, grid),
        Lemma1Config("gaussian_band_half", _laws.gaussian(), (q(0.25), q(0.5)), (q(0.75), q(1.0)),
                     tau=1.0, alpha=0.0, beta=0.5),
    ]


def _log_binom_prefix(N, J):
    """``log C(N, j)`` for ``j = 0..J`` by cumulative sums (accurate for huge ``N``)."""
    j = np.arange(1, J + 1, dtype=np.float64)
    steps = np.log(float(N) - j + 1.0) - np.log(j)
    return np.concatenate([[0.0], np.cumsum(steps)])


def binomial_upper_tail(N, q, k):
    """``P(Bin(N, q) >= k)`` summed in log space."""
    if k <= 0:
        return 1.0
    if k > N:
        return 0.0
    if not 0 < q < 1:
        return float(q >= 1)
    lq, l1q = math.log(q), math.log1p(-q)
    mean = N * q
    if k - 1 <= mean:
        lc = _log_binom_prefix(N, k - 1)
        j = np.arange(k)
        logs = lc + j * lq + (N - j) * l1q
        return float(-np.expm1(special.logsumexp(logs)))
    span = int(min(N, k + 60 * math.sqrt(k + 1) + 200))
    if span > 10 ** 7:
        raise ValueError("binomial tail range too large for direct summation")
    lc = _log_binom_prefix(N, span)
    j = np.arange(k, span + 1)
    logs = lc[k:] + j * lq + (N - j) * l1q
    return float(np.exp(special.logsumexp(logs)))


def wr_exact_probability(params):
    """``P(W_r) = P(Bin(n_r^d, beta_r^-(p+1)/2) >= k_r)``."""
    if params.k < 1:
        raise ValueError("k_r must be >= 1")
    return binomial_upper_tail(params.sites, params.exceed_prob, params.k)


def counterexample_experiment(p, d, rs, reps, seed=0, threads=1, min_freq=0.2, n_se=4.0,
                              cap=DEFAULT_CAP):
    """Frequency of ``{A_r(omega) exists and modulus >= 1/2}`` versus the exact ``P(W_r)``.

    For each replication the class is ``{empty, A_r(omega)}`` and the modulus
    is taken at ``delta = 2 rho(empty, A_r)``, so it equals
    ``|n_r^{-d/2} S_{n_r}(A_r)|``.
    """
    t0 = time.perf_counter()
    law = _laws.counterexample_integer(p)
    rows = []
    for r in rs:
        params = counterexample_params(p, d, r)
        _check_cap(params.sites, reps, cap)
        empty = Empty(d)
        meas = params.k / params.sites
        delta = 2.0 * math.sqrt(meas)
        dist = np.array([[0.0, math.sqrt(meas)], [math.sqrt(meas), 0.0]])

        def one(j, params=params):
            fld = sample_field(law, d, params.n, replication_seed(seed, r, j))
            region = adaptive_region(fld, params)
            if region is None:
                return math.nan
            ev = evaluate(fld, [empty, region], "standard")
            return modulus(ev, delta, dist)

        stats_r = np.array(pmap(one, range(reps), threads))
        exists = ~np.isnan(stats_r)
        hit = exists & (np.nan_to_num(stats_r, nan=-1.0) >= 0.5)
        f = float(hit.mean())
        oracle = wr_exact_probability(params)
        se = math.sqrt(oracle * (1.0 - oracle) / reps)
        ok = abs(f - oracle) <= n_se * se and f >= min_freq
        rows.append({
            "r": r, "n_r": params.n, "beta_r": params.beta, "k_r": params.k,
            "eps_r": params.eps, "lambda_A": meas, "f_r": f, "oracle": oracle, "se": se,
            "min_stat_on_Wr": float(np.min(stats_r[exists])) if exists.any() else math.nan,
            "verdict": "pass" if ok else "fail",
        })
    fmin = min(row["f_r"] for row in rows)
    verdict = "pass" if all(row["verdict"] == "pass" for row in rows) else "fail"
    return TestReport("counterexample_min_freq", fmin, min_freq, 1e-12, sided="lower",
                      verdict=verdict, seed=seed, rows=rows, runtime=time.perf_counter() - t0,
                      details={"p": p, "d": d, "reps": reps, "n_se": n_se})

