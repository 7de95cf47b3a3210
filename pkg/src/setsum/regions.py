"""Subsets of [0,1]^d with exact measures, lattice weights and distances.

Every supported shape is a finite union of boxes with disjoint interiors, so
intersection volumes (and hence the distance sqrt(lambda(A delta B))) reduce to
sums of box-box overlaps and stay exact up to floating rounding.
"""

from dataclasses import dataclass
import ast
import itertools
import math

import numpy as np

# snapping tolerance for lattice membership of closed boundaries given as floats
_SNAP = 1e-9


@dataclass(frozen=True)
class Empty:
    d: int

    def boxes(self, scale=1):
        return []


@dataclass(frozen=True)
class Quadrant:
    """``[0, t_1] x ... x [0, t_d]``."""

    t: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if not self.t or any(not 0 <= v <= 1 for v in self.t):
            raise ValueError("quadrant corner must lie in [0,1]^d")

    @property
    def d(self):
        return len(self.t)

    def boxes(self, scale=1):
        return [(np.zeros(self.d), scale * np.array(self.t))]


@dataclass(frozen=True)
class Box:
    """Closed box ``[lower, upper]``."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        up = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if len(lo) != len(up) or not lo:
            raise ValueError("box corners must have the same positive dimension")
        if any(not 0 <= a <= b <= 1 for a, b in zip(lo, up)):
            raise ValueError("box needs 0 <= lower <= upper <= 1 coordinatewise")

    @property
    def d(self):
        return len(self.lower)

    def boxes(self, scale=1):
        return [(scale * np.array(self.lower), scale * np.array(self.upper))]


@dataclass(frozen=True)
class CellUnion:
    """Union of half-open cells ``](c-1)/m, c/m]`` for 1-based cell indices ``c``."""

    m: int
    cells: tuple

    def __post_init__(self):
        cells = tuple(tuple(int(c) for c in cell) for cell in self.cells)
        object.__setattr__(self, "cells", cells)
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("cell resolution m must be a positive integer")
        if not cells:
            raise ValueError("cell union needs at least one cell (use Empty)")
        d = len(cells[0])
        if any(len(c) != d for c in cells) or d == 0:
            raise ValueError("cells must share a positive dimension")
        if any(not 1 <= v <= self.m for c in cells for v in c):
            raise ValueError("cell indices must lie in 1..m")
        if len(set(cells)) != len(cells):
            raise ValueError("cells must be distinct")

    @property
    def d(self):
        return len(self.cells[0])

    def boxes(self, scale=1):
        out = []
        for c in self.cells:
            c = np.array(c)
            # scale*(c-1)/m with the product first, exact when m divides it
            out.append(((scale * (c - 1)) / self.m, (scale * c) / self.m))
        return out


def _dim(region):
    return region.d


def lebesgue(region):
    """Exact Lebesgue measure."""
    if isinstance(region, Empty):
        return 0.0
    if isinstance(region, Quadrant):
        return math.prod(region.t)
    if isinstance(region, Box):
        return math.prod(u - l for l, u in zip(region.lower, region.upper))
    if isinstance(region, CellUnion):
        return len(region.cells) / region.m ** region.d
    raise TypeError(f"unsupported region {region!r}")


@dataclass(frozen=True, eq=False)
class WeightGrid:
    d: int
    n: int
    weights: np.ndarray


def _overlap_1d(lo, hi, n):
    """Overlap lengths of [lo, hi] with ]i-1, i] for the touched i; returns (first_i, lengths)."""
    first = max(1, int(math.floor(lo)) + 1)
    last = min(n, int(math.ceil(hi)))
    if last < first:
        return first, np.zeros(0)
    i = np.arange(first, last + 1, dtype=np.float64)
    return first, np.clip(np.minimum(hi, i) - np.maximum(lo, i - 1.0), 0.0, 1.0)


def weight_grid(region, n):
    """``w_i = lambda(nA cap R_i)`` for all ``i`` in {1..n}^d."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    d = _dim(region)
    w = np.zeros((n,) * d)
    for lo, hi in region.boxes(scale=n):
        starts, pieces = [], []
        for j in range(d):
            first, ov = _overlap_1d(lo[j], hi[j], n)
            starts.append(first)
            pieces.append(ov)
        if any(p.size == 0 for p in pieces):
            continue
        block = pieces[0]
        for p in pieces[1:]:
            block = np.multiply.outer(block, p)
        sl = tuple(slice(s - 1, s - 1 + p.size) for s, p in zip(starts, pieces))
        w[sl] += block
    return WeightGrid(d, n, w)


def _box_overlap(a, b):
    lo = np.maximum(a[0], b[0])
    hi = np.minimum(a[1], b[1])
    return float(np.prod(np.clip(hi - lo, 0.0, None)))


def intersection_measure(a, b):
    """``lambda(A cap B)``."""
    if _dim(a) != _dim(b):
        raise ValueError("regions have different dimensions")
    if isinstance(a, Empty) or isinstance(b, Empty):
        return 0.0
    if isinstance(a, Quadrant) and isinstance(b, Quadrant):
        return math.prod(min(s, t) for s, t in zip(a.t, b.t))
    if isinstance(a, CellUnion) and isinstance(b, CellUnion) and a.m == b.m:
        return len(set(a.cells) & set(b.cells)) / a.m ** a.d
    return math.fsum(_box_overlap(x, y) for x in a.boxes() for y in b.boxes())


def rho(a, b):
    """Pseudo-metric ``sqrt(lambda(A delta B))``."""
    sym = lebesgue(a) + lebesgue(b) - 2.0 * intersection_measure(a, b)
    return math.sqrt(max(sym, 0.0))


def rho_matrix(regions):
    k = len(regions)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = rho(regions[i], regions[j])
    return out


def lattice_members(region, n, lattice="positive"):
    """Sites of ``nA`` on the lattice, as an ``(k, d)`` array of indices.

    ``lattice="positive"`` intersects with {1..n}^d; ``"full"`` keeps every
    point of ``nA cap Z^d`` (which, for ``A`` in [0,1]^d, lies in {0..n}^d).
    """
    if lattice not in ("positive", "full"):
        raise ValueError("lattice must be 'positive' or 'full'")
    d = _dim(region)
    low = 1 if lattice == "positive" else 0
    if isinstance(region, Empty):
        return np.zeros((0, d), dtype=np.int64)
    if isinstance(region, CellUnion):
        pts = set()
        for c in region.cells:
            axes = []
            for v in c:
                # (v-1)/m < i/n <= v/m
                lo = (n * (v - 1)) // region.m + 1
                hi = (n * v) // region.m
                axes.append(range(max(lo, low), min(hi, n) + 1))
            pts.update(itertools.product(*axes))
        return np.array(sorted(pts), dtype=np.int64).reshape(-1, d)
    lo, hi = region.boxes(scale=n)[0]
    axes = []
    for j in range(d):
        first = max(low, int(math.ceil(lo[j] - _SNAP * n)))
        last = min(n, int(math.floor(hi[j] + _SNAP * n)))
        axes.append(range(first, last + 1))
    return np.array(list(itertools.product(*axes)), dtype=np.int64).reshape(-1, d)


@dataclass(frozen=True)
class CounterexampleParams:
    p: int
    d: int
    r: int
    n: int
    beta: int
    k: int
    eps: float

    @property
    def sites(self):
        return self.n ** self.d

    @property
    def exceed_prob(self):
        """``P(X >= beta)`` under the counterexample law."""
        return 0.5 * float(self.beta) ** -(self.p + 1)


_INT64_MAX = 2 ** 63 - 1


def counterexample_params(p, d, r):
    """Sequences ``n_r = 4^(rp)``, ``beta_r = 2^(rd)``, ``k_r``, ``eps_r = 2^(-rd(p+1)/2)``.

    ``k_r = ceil(n_r^d beta_r^-(p+1) / 2)`` so that the expected number of
    sites with ``X >= beta_r`` does not exceed ``k_r`` by more than rounding.
    """
    for name, v in (("p", p), ("d", d), ("r", r)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be an integer >= 1")
    n, beta, k, eps = counterexample_sequences(p, d, r)
    if n ** d > _INT64_MAX:
        raise ValueError(f"n_r^d = 4^({r * p * d}) overflows 64-bit site indices; "
                         f"choose smaller p, d or r (need r*p*d <= 31)")
    return CounterexampleParams(p, d, r, n, beta, k, eps)


def counterexample_sequences(p, d, r):
    """``(n_r, beta_r, k_r, eps_r)`` in exact integer arithmetic, no size check."""
    n = 4 ** (r * p)
    beta = 2 ** (r * d)
    k = -(-(n ** d) // (2 * beta ** (p + 1)))
    return n, beta, k, 2.0 ** (-r * d * (p + 1) / 2.0)


def adaptive_region(field, params):
    """Union of the first ``k_r`` cells (lexicographic) where ``X_i >= beta_r``; ``None`` if too few."""
    if field.d != params.d or field.n != params.n:
        raise ValueError(f"field is ({field.d}, {field.n}), params need ({params.d}, {params.n})")
    hits = np.flatnonzero(field.flat >= params.beta)
    if hits.size < params.k:
        return None
    coords = np.array(np.unravel_index(hits[:params.k], (params.n,) * params.d)).T + 1
    return CellUnion(params.n, tuple(map(tuple, coords.tolist())))


DEFAULT_CAP = 10 ** 5


def class_enumerate(kind, m, d=1, k=1, cap=DEFAULT_CAP):
    """Enumerate ``quadrant_grid`` (corners on the grid j/m) or ``cell_unions`` (k of m^d cells)."""
    if kind == "quadrant_grid":
        count = (m + 1) ** d
        if count > cap:
            raise ValueError(f"quadrant grid has {count} members, above cap {cap}")
        return [Quadrant(tuple(j / m for j in idx))
                for idx in itertools.product(range(m + 1), repeat=d)]
    if kind == "cell_unions":
        count = math.comb(m ** d, k)
        if count > cap:
            raise ValueError(f"cell_unions(m={m}, k={k}, d={d}) has {count} members, above cap {cap}")
        cells = list(itertools.product(range(1, m + 1), repeat=d))
        return [CellUnion(m, combo) for combo in itertools.combinations(cells, k)]
    raise ValueError(f"unknown class kind {kind!r}")


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def parse_region(text):
    """Parse ``quadrant:t1,..``, ``box:l1,..:u1,..``, ``cells:m=<m>:[(i,..),...]`` or ``empty:<d>``."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    try:
        if kind == "quadrant":
            return Quadrant(_floats(rest))
        if kind == "box":
            lo, up = rest.split(":")
            return Box(_floats(lo), _floats(up))
        if kind == "cells":
            head, cells = rest.split(":", 1)
            if not head.startswith("m="):
                raise ValueError("expected m=<resolution>")
            cells = ast.literal_eval(cells)
            cells = [c if isinstance(c, tuple) else (c,) for c in cells]
            return CellUnion(int(head[2:]), tuple(cells))
        if kind == "empty":
            return Empty(int(rest))
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"invalid region {text!r}: {exc}") from None
    raise ValueError(f"invalid region {text!r}: unknown shape")


def format_region(region):
    if isinstance(region, Empty):
        return f"empty:{region.d}"
    if isinstance(region, Quadrant):
        return "quadrant:" + ",".join(repr(v) for v in region.t)
    if isinstance(region, Box):
        return ("box:" + ",".join(repr(v) for v in region.lower)
                + ":" + ",".join(repr(v) for v in region.upper))
    cells = ",".join("(" + ",".join(map(str, c)) + ")" for c in region.cells)
    return f"cells:m={region.m}:[{cells}]"
