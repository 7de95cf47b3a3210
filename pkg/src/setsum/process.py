"""The smoothed partial-sum process and its normalisations."""

from dataclasses import dataclass, field as dc_field
import math

import numpy as np
from scipy import optimize

from . import laws as _laws
from .fields import apply_truncation
from .regions import format_region, lattice_members, rho_matrix, weight_grid

NORMALIZATIONS = ("standard", "norming", "self")


def _check_dim(fld, region):
    if fld.d != region.d:
        raise ValueError(f"field has d={fld.d} but region has d={region.d}")


class SparseWeights:
    """Nonzero entries of a weight grid, reusable across many fields of the same size."""

    def __init__(self, region, n):
        w = weight_grid(region, n).weights.reshape(-1)
        self.region = region
        self.n = n
        self.index = np.flatnonzero(w)
        self.values = w[self.index]

    def apply(self, flat_values):
        # fsum is correctly rounded, so the result does not depend on visiting order
        return math.fsum(self.values * flat_values[self.index])


def partial_sum(fld, region):
    """``S_n(A) = sum_i lambda(nA cap R_i) X_i`` with compensated summation."""
    _check_dim(fld, region)
    return SparseWeights(region, fld.n).apply(fld.flat)


def self_normalizer(fld):
    """``U_n = sqrt(sum X_i^2)`` over the whole lattice."""
    v = fld.flat
    return math.sqrt(math.fsum(v * v))


@dataclass(frozen=True)
class NormingSequence:
    law: _laws.LawSpec
    d: int
    table: tuple  # (n, b_n, b_n^2) triples
    residuals: tuple

    def b(self, n):
        for m, b, _ in self.table:
            if m == n:
                return b
        raise KeyError(n)


def _norming(law, d, n):
    if not law.is_iid:
        raise ValueError("norming constants need an i.i.d. law")
    N = float(n) ** d

    def g(b):
        return b * b - N * _laws.truncated_second_moment(law, b)

    m2 = _laws.second_moment(law)
    if m2 == 0:
        raise ValueError("law has zero second moment")
    hi = math.sqrt(N * (m2 if math.isfinite(m2) else 1.0))
    for _ in range(2000):
        if g(hi) > 0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("could not bracket the norming constant")
    lo = hi
    for _ in range(2000):
        lo *= 0.5
        if g(lo) < 0:
            break
    else:
        raise ValueError(f"no positive fixed point b^2 = n^d E[X^2 1{{|X|<b}}] for {law} at n={n}")
    b = optimize.brentq(g, lo, 2.0 * lo, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # one fixed-point step: b^2 = N * m(b) exactly where m is locally flat
    b_sq = N * _laws.truncated_second_moment(law, b)
    b = math.sqrt(b_sq)
    resid = abs(b * b - N * _laws.truncated_second_moment(law, b)) / (b * b)
    if resid >= 1e-10:
        raise ValueError(f"norming equation has no exact root for {law} at n={n} (residual {resid:.3g})")
    return b, b_sq, resid


def norming_constant(law, d, n):
    """``b_n``: largest root of ``b^2 = n^d E[X^2 1{|X| < b}]`` (relative residual < 1e-10)."""
    return _norming(law, d, n)[0]


def norming_sequence(law, d, ns):
    rows, res = [], []
    for n in ns:
        b, b_sq, r = _norming(law, d, n)
        rows.append((n, b, b_sq))
        res.append(r)
    return NormingSequence(law, d, tuple(rows), tuple(res))


def gamma_set(region, n, lattice="positive"):
    """``Gamma_n(A)``: lattice points of ``nA`` (1-based indices, see ``lattice_members``)."""
    return lattice_members(region, n, lattice)


def _gamma_values(fld, region):
    idx = gamma_set(region, fld.n) - 1
    return fld.values[tuple(idx.T)] if idx.size else np.zeros(0)


def gamma_sum(fld, region):
    """``S_Gamma = sum of X_i over Gamma_n(A)``."""
    _check_dim(fld, region)
    return math.fsum(_gamma_values(fld, region))


def t_statistics(fld, region):
    """``(T_n1, T_n2^2)``: the self-normalised sum over ``Gamma_n(A)`` and its share of ``U_n^2``.

    Both are ``nan`` when ``Gamma_n(A)`` is empty or all its values are 0.
    """
    _check_dim(fld, region)
    g = _gamma_values(fld, region)
    sq = math.fsum(g * g)
    if g.size == 0 or sq == 0:
        return math.nan, math.nan
    total = math.fsum(fld.flat * fld.flat)
    return math.fsum(g) / math.sqrt(sq), sq / total


def truncated_piece_process(fld, region, piece, centering="mean"):
    """``(1/c_n) sum_i w_i [X_i 1{band} - centre_i]`` for a band ``piece``.

    ``centering`` is ``"mean"`` (law mean of the band, i.i.d. fields),
    ``"conditional-mean"`` (md fields, ``sigma_i`` times the innovation band
    mean) or ``"none"``.
    """
    _check_dim(fld, region)
    band = apply_truncation(fld, piece).reshape(-1)
    law = fld.law
    if centering == "none":
        centre = 0.0
    elif centering == "mean":
        if not law.is_iid:
            raise ValueError("'mean' centering needs an i.i.d. law; use 'conditional-mean'")
        centre = _laws.band_mean(law, piece.lo, piece.hi)
    elif centering == "conditional-mean":
        if law.kind != "md" or fld.cond_std is None:
            raise ValueError("'conditional-mean' centering needs an md field")
        sig = fld.cond_std.reshape(-1)
        centre = np.array([s * _laws.band_mean(law.base, piece.lo / s, piece.hi / s) for s in sig])
    else:
        raise ValueError(f"unknown centering {centering!r}")
    sw = SparseWeights(region, fld.n)
    return sw.apply(band - centre) / piece.c_n


@dataclass(frozen=True, eq=False)
class ProcessEvaluation:
    regions: tuple
    raw: np.ndarray
    normalization: str
    normalizer: float
    normalized: np.ndarray
    d: int
    n: int
    seed: int
    law: _laws.LawSpec
    undefined: bool = False
    extra: dict = dc_field(default_factory=dict)

    def rows(self):
        for reg, raw, val in zip(self.regions, self.raw, self.normalized):
            yield {
                "region": format_region(reg),
                "raw": float(raw),
                "normalized": float(val),
                "normalization": self.normalization,
                "n": self.n,
                "d": self.d,
                "seed": self.seed,
            }


def normalizer_value(fld, normalization, norming=None):
    if normalization == "standard":
        return float(fld.n) ** (fld.d / 2.0)
    if normalization == "self":
        return self_normalizer(fld)
    if normalization == "norming":
        return norming if norming is not None else norming_constant(fld.law, fld.d, fld.n)
    raise ValueError(f"unknown normalization {normalization!r}")


def evaluate(fld, regions, normalization="standard", weights=None, norming=None):
    """Raw and normalised ``S_n(A)`` for each region.

    ``weights`` may carry precomputed ``SparseWeights`` (one per region).
    Self-normalised values are ``nan`` and ``undefined`` is set when ``U_n = 0``.
    """
    regions = tuple(regions)
    for reg in regions:
        _check_dim(fld, reg)
    if weights is None:
        weights = [SparseWeights(reg, fld.n) for reg in regions]
    flat = fld.flat
    raw = np.array([w.apply(flat) for w in weights])
    z = normalizer_value(fld, normalization, norming)
    undefined = z == 0
    normed = np.full_like(raw, np.nan) if undefined else raw / z
    return ProcessEvaluation(regions, raw, normalization, z, normed, fld.d, fld.n,
                             fld.seed, fld.law, undefined)


def modulus(evaluation, delta, distances=None):
    """``max |Z(A) - Z(B)|`` over pairs with ``rho(A, B) < delta`` (0 if no such pair)."""
    vals = np.asarray(evaluation.normalized, dtype=float)
    if np.isnan(vals).any():
        raise ValueError("evaluation has undefined normalised values")
    if distances is None:
        distances = rho_matrix(list(evaluation.regions))
    close = np.triu(distances < delta, k=1)
    if not close.any():
        return 0.0
    diffs = np.abs(vals[:, None] - vals[None, :])
    return float(diffs[close].max())
