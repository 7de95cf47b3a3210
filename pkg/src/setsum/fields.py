"""Random fields on the lattice {1..n}^d.

Values are stored as a C-ordered array of shape ``(n,) * d``; C order is the
lexicographic order on indices, so flat position ``j`` is the ``j``-th site in
lexicographic order.
"""

from dataclasses import dataclass
import itertools

import numba
import numpy as np

from . import laws as _laws
from .rng import site_uniforms

MAX_SITES = 1 << 31


@dataclass(frozen=True, eq=False)
class FieldSample:
    d: int
    n: int
    values: np.ndarray
    seed: int
    law: _laws.LawSpec
    cond_std: "np.ndarray | None" = None

    @property
    def flat(self):
        return self.values.reshape(-1)

    def scaled(self, s):
        """Field with every value multiplied by ``s`` (same metadata)."""
        return FieldSample(self.d, self.n, _frozen(self.values * s), self.seed, self.law,
                           None if self.cond_std is None else _frozen(self.cond_std * abs(s)))


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def from_values(values, seed=0, law=None):
    """Wrap a given array as a field (deterministic test fields)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if any(s != n for s in values.shape) or n < 1:
        raise ValueError("field values must have shape (n,)*d with n >= 1")
    return FieldSample(values.ndim, n, _frozen(values), seed, law or _laws.gaussian())


def _check_size(d, n):
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if n ** d > MAX_SITES:
        raise ValueError(f"lattice with n^d = {n ** d} sites exceeds the {MAX_SITES} cap")


def sample_iid_field(law, d, n, seed, block=None):
    """Draw an i.i.d. field; site ``j`` (lexicographic) uses uniform ``j`` of the stream.

    ``block`` splits generation into independent chunks of that many sites;
    the result does not depend on it.
    """
    if not law.is_iid:
        raise ValueError(f"sample_iid_field does not accept {law.kind} laws")
    _check_size(d, n)
    total = n ** d
    if block is None or block >= total:
        u = site_uniforms(seed, 0, total)
    else:
        u = np.concatenate([site_uniforms(seed, s, min(block, total - s))
                            for s in range(0, total, block)])
    return FieldSample(d, n, _frozen(_laws.from_uniforms(law, u).reshape((n,) * d)), seed, law)


def window_predecessor_offsets(d, w):
    """Offsets ``o`` in ``{-w..w}^d`` with ``o <_lex 0``, in lexicographic order."""
    offs = [o for o in itertools.product(range(-w, w + 1), repeat=d)
            if any(o) and next(c for c in o if c) < 0]
    return np.array(offs, dtype=np.int64).reshape(-1, d)


@numba.njit(cache=True)
def _md_kernel(eps, coords, n, offsets, a):
    total, d = coords.shape
    x = np.empty(total)
    sig = np.empty(total)
    for f in range(total):
        acc = 0.0
        cnt = 0
        for m in range(offsets.shape[0]):
            g = 0
            ok = True
            for k in range(d):
                c = coords[f, k] + offsets[m, k]
                if c < 0 or c >= n:
                    ok = False
                    break
                g = g * n + c
            if ok:
                acc += x[g]
                cnt += 1
        s = 1.0
        if cnt > 0:
            s = 1.0 + a * np.tanh(acc / cnt)
        sig[f] = s
        x[f] = s * eps[f]
    return x, sig


def sample_md_field(law, d, n, seed):
    """Martingale-difference field ``X_i = sigma_i * eps_i`` built in lexicographic order.

    ``sigma_i = 1 + a * tanh(mean of X over the lexicographic predecessors of i
    inside the window of radius w)``; ``eps_i`` is a fresh innovation, so
    ``E(X_i | past) = 0`` and ``sigma_i`` stays in ``[1 - a, 1 + a]``.
    """
    if law.kind != "md":
        raise ValueError("sample_md_field needs an md law")
    _check_size(d, n)
    total = n ** d
    eps = _laws.from_uniforms(law.base, site_uniforms(seed, 0, total))
    coords = np.indices((n,) * d).reshape(d, -1).T.copy()
    x, sig = _md_kernel(eps, coords, n, window_predecessor_offsets(d, law.w), law.a)
    shape = (n,) * d
    return FieldSample(d, n, _frozen(x.reshape(shape)), seed, law, _frozen(sig.reshape(shape)))


def sample_field(law, d, n, seed):
    """Dispatch on the law kind."""
    if law.kind == "md":
        return sample_md_field(law, d, n, seed)
    return sample_iid_field(law, d, n, seed)


@dataclass(frozen=True)
class TruncationPiece:
    """Band ``alpha*tau*c_n <= |x| < beta*tau*c_n``."""

    tau: float
    c_n: float
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if not self.c_n > 0:
            raise ValueError("c_n must be positive")
        if not 0 <= self.alpha <= 1 or not 0 <= self.beta <= 1:
            raise ValueError("band limits must lie in [0, 1]")
        if self.alpha > self.beta:
            raise ValueError("band requires alpha <= beta")

    @property
    def lo(self):
        return self.alpha * self.tau * self.c_n

    @property
    def hi(self):
        return self.beta * self.tau * self.c_n


def apply_truncation(field, piece):
    """Entrywise ``X_i 1{lo <= |X_i| < hi}`` as an array shaped like the field."""
    v = field.values
    a = np.abs(v)
    return np.where((a >= piece.lo) & (a < piece.hi), v, 0.0)
