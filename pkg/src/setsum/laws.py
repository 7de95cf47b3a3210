"""Marginal laws of the simulated fields.

All laws are symmetric about zero.  Each i.i.d. law is realised from a single
uniform per site (inverse-CDF), which is what keeps field generation
counter-based and order independent.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

IID_KINDS = ("gaussian", "rademacher", "pareto", "counterexample")


@dataclass(frozen=True)
class LawSpec:
    """Descriptor of a marginal law.

    ``kind`` is one of ``gaussian`` (``var``), ``rademacher``, ``pareto``
    (symmetric, ``P(|X| > x) = min(1, x**-alpha)``), ``counterexample``
    (symmetric integer law with ``P(|X| >= k) = k**-(p+1)``) or ``md``
    (martingale-difference field ``sigma_i * eps_i`` over ``base`` innovations
    with modulation amplitude ``a`` and window radius ``w``).
    """

    kind: str
    var: float = 1.0
    alpha: float = 2.0
    p: int = 1
    a: float = 0.0
    w: int = 1
    base: "LawSpec | None" = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.var > 0:
                raise ValueError("gaussian variance must be positive")
        elif self.kind == "pareto":
            if not self.alpha > 0:
                raise ValueError("pareto alpha must be positive")
        elif self.kind == "counterexample":
            if int(self.p) != self.p or self.p < 1:
                raise ValueError("counterexample p must be an integer >= 1")
        elif self.kind == "md":
            if not 0 <= self.a < 1:
                raise ValueError("md modulation amplitude must lie in [0, 1)")
            if int(self.w) != self.w or self.w < 1:
                raise ValueError("md window radius must be an integer >= 1")
            if self.base is None or not _unit_innovation(self.base):
                raise ValueError("md base must be gaussian:1 or rademacher")
        elif self.kind != "rademacher":
            raise ValueError(f"unknown law kind {self.kind!r}")

    @property
    def is_iid(self):
        return self.kind in IID_KINDS

    def __str__(self):
        return format_law(self)


def _unit_innovation(law):
    return law.kind == "rademacher" or (law.kind == "gaussian" and law.var == 1.0)


def gaussian(var=1.0):
    return LawSpec("gaussian", var=float(var))


def rademacher():
    return LawSpec("rademacher")


def pareto_tail(alpha=2.0):
    return LawSpec("pareto", alpha=float(alpha))


def counterexample_integer(p=1):
    return LawSpec("counterexample", p=int(p))


def md_bounded(base=None, a=0.5, w=1):
    return LawSpec("md", a=float(a), w=int(w), base=base or rademacher())


def parse_law(text):
    """Parse ``gaussian:1``, ``rademacher``, ``pareto:2``, ``counterexample:1``
    or ``md:a=0.5,w=1,base=rademacher``."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "gaussian":
            return gaussian(float(rest) if rest else 1.0)
        if kind == "rademacher":
            if rest:
                raise ValueError("rademacher takes no parameter")
            return rademacher()
        if kind == "pareto":
            return pareto_tail(float(rest) if rest else 2.0)
        if kind == "counterexample":
            return counterexample_integer(int(rest) if rest else 1)
        if kind == "md":
            opts = {"a": "0.5", "w": "1", "base": "rademacher"}
            if rest:
                for item in rest.split(","):
                    key, sep, value = item.partition("=")
                    key = key.strip()
                    if not sep or key not in opts:
                        raise ValueError(f"bad md option {item!r}")
                    opts[key] = value.strip()
            base = parse_law(opts["base"].replace(";", ":"))
            return md_bounded(base, float(opts["a"]), int(opts["w"]))
    except ValueError as exc:
        raise ValueError(f"invalid law {text!r}: {exc}") from None
    raise ValueError(f"invalid law {text!r}: unknown kind")


def format_law(law):
    if law.kind == "gaussian":
        return f"gaussian:{law.var!r}"
    if law.kind == "rademacher":
        return "rademacher"
    if law.kind == "pareto":
        return f"pareto:{law.alpha!r}"
    if law.kind == "counterexample":
        return f"counterexample:{law.p}"
    base = format_law(law.base).replace(":", ";")
    return f"md:a={law.a!r},w={law.w},base={base}"


def from_uniforms(law, u):
    """Map uniforms in (0, 1) to draws of an i.i.d. law, one uniform per draw."""
    u = np.asarray(u, dtype=np.float64)
    if law.kind == "gaussian":
        return math.sqrt(law.var) * special.ndtri(u)
    lower = u < 0.5
    sign = np.where(lower, -1.0, 1.0)
    if law.kind == "rademacher":
        return sign
    # the two halves of (0, 1) give an independent sign and a fresh uniform
    v = np.where(lower, 2.0 * u, 2.0 * (1.0 - u))
    if law.kind == "pareto":
        return sign * v ** (-1.0 / law.alpha)
    if law.kind == "counterexample":
        return sign * np.floor(v ** (-1.0 / (law.p + 1)))
    raise ValueError(f"{law.kind} is not an i.i.d. law")


def abs_tail(law, x):
    """``P(|X| >= x)`` for an i.i.d. law."""
    x = float(x)
    if x <= 0:
        return 1.0
    if law.kind == "gaussian":
        return float(special.erfc(x / math.sqrt(2.0 * law.var)))
    if law.kind == "rademacher":
        return 1.0 if x <= 1 else 0.0
    if law.kind == "pareto":
        return min(1.0, x ** -law.alpha)
    if law.kind == "counterexample":
        return math.ceil(x) ** -(law.p + 1.0)
    raise ValueError(f"{law.kind} is not an i.i.d. law")


def second_moment(law):
    """``E X**2`` (``inf`` when the law has infinite variance)."""
    if law.kind == "gaussian":
        return law.var
    if law.kind == "rademacher":
        return 1.0
    if law.kind == "pareto":
        return law.alpha / (law.alpha - 2.0) if law.alpha > 2 else math.inf
    if law.kind == "counterexample":
        if law.p == 1:
            return math.inf
        # sum_k k^2 (k^-(p+1) - (k+1)^-(p+1)) = sum_k (2k-1) k^-(p+1)
        return float(2.0 * special.zeta(law.p) - special.zeta(law.p + 1))
    raise ValueError("md laws have no closed-form second moment")


def truncated_second_moment(law, threshold):
    """Exact ``E[X**2 1{|X| < threshold}]``."""
    t = float(threshold)
    if not t > 0:
        raise ValueError("threshold must be positive")
    if law.kind == "gaussian":
        s = t / math.sqrt(law.var)
        inner = math.erf(s / math.sqrt(2.0)) - 2.0 * s * math.exp(-0.5 * s * s) / math.sqrt(2.0 * math.pi)
        return law.var * max(inner, 0.0)
    if law.kind == "rademacher":
        return 1.0 if t > 1 else 0.0
    if law.kind == "pareto":
        if t <= 1:
            return 0.0
        if law.alpha == 2:
            return 2.0 * math.log(t)
        return law.alpha * (t ** (2.0 - law.alpha) - 1.0) / (2.0 - law.alpha)
    if law.kind == "counterexample":
        top = math.ceil(t) - 1
        if top < 1:
            return 0.0
        k = np.arange(1, top + 1, dtype=np.float64)
        q = law.p + 1.0
        return math.fsum(k * k * (k ** -q - (k + 1.0) ** -q))
    raise ValueError("truncated second moment needs an i.i.d. law")


def band_mean(law, lo, hi):
    """``E[X 1{lo <= |X| < hi}]``; zero because every supported law is symmetric."""
    if lo > hi:
        raise ValueError("band requires lo <= hi")
    if law.kind == "md":
        return band_mean(law.base, lo, hi)
    return 0.0
