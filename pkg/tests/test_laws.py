from fractions import Fraction
import math

import numpy as np
import pytest
from scipy import integrate

from setsum import laws
from setsum.rng import site_uniforms


@pytest.mark.parametrize("text", [
    "gaussian:1.0", "gaussian:2.5", "rademacher", "pareto:2.0", "pareto:3.0",
    "counterexample:1", "counterexample:3", "md:a=0.5,w=1,base=rademacher",
    "md:a=0.25,w=2,base=gaussian;1.0",
])
def test_parse_format_round_trip(text):
    law = laws.parse_law(text)
    assert laws.format_law(law) == text
    assert laws.parse_law(laws.format_law(law)) == law


@pytest.mark.parametrize("text", ["gaussian:-1", "pareto:0", "counterexample:0", "cauchy",
                                  "md:a=1.0", "md:base=pareto;2", "rademacher:2", "md:q=1"])
def test_invalid_laws_rejected(text):
    with pytest.raises(ValueError):
        laws.parse_law(text)


def test_counterexample_tail_frequencies():
    law = laws.counterexample_integer(1)
    x = laws.from_uniforms(law, site_uniforms(3, 0, 10**6))
    assert np.all(x != 0) and np.all(x == np.round(x))
    for k in range(1, 6):
        q = k ** -2.0
        f = np.mean(np.abs(x) >= k)
        assert abs(f - q) <= 4 * math.sqrt(q * (1 - q) / x.size)
    assert abs(np.mean(x > 0) - 0.5) <= 4 * math.sqrt(0.25 / x.size)


def test_pareto_tail_frequencies():
    law = laws.pareto_tail(2.0)
    x = laws.from_uniforms(law, site_uniforms(4, 0, 10**6))
    assert np.abs(x).min() >= 1.0
    for t in (1.5, 3.0, 10.0):
        q = t ** -2.0
        assert abs(np.mean(np.abs(x) > t) - q) <= 4 * math.sqrt(q * (1 - q) / x.size)


def test_gaussian_and_rademacher_draws():
    u = site_uniforms(5, 0, 200_000)
    g = laws.from_uniforms(laws.gaussian(4.0), u)
    assert abs(g.var() - 4.0) < 0.05
    r = laws.from_uniforms(laws.rademacher(), u)
    assert set(np.unique(r)) == {-1.0, 1.0}


def test_abs_tail():
    assert laws.abs_tail(laws.counterexample_integer(1), 3) == pytest.approx(1 / 9)
    assert laws.abs_tail(laws.counterexample_integer(2), 2.5) == pytest.approx(1 / 27)
    assert laws.abs_tail(laws.pareto_tail(2.0), 0.5) == 1.0
    assert laws.abs_tail(laws.gaussian(1.0), 1.96) == pytest.approx(0.05, abs=1e-3)


def test_second_moments():
    assert laws.second_moment(laws.rademacher()) == 1.0
    assert laws.second_moment(laws.pareto_tail(3.0)) == pytest.approx(3.0)
    assert math.isinf(laws.second_moment(laws.pareto_tail(2.0)))
    assert math.isinf(laws.second_moment(laws.counterexample_integer(1)))
    # direct truncated sum for p = 2: sum (2k-1) k^-3
    direct = math.fsum((2 * k - 1) * k ** -3.0 for k in range(1, 2_000_000))
    assert laws.second_moment(laws.counterexample_integer(2)) == pytest.approx(direct, rel=1e-6)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5, 6.0])
def test_truncated_second_moment_gaussian_quadrature(t):
    law = laws.gaussian(2.0)
    dens = lambda x: x * x * math.exp(-x * x / 4.0) / math.sqrt(4.0 * math.pi)  # noqa: E731
    ref = 2 * integrate.quad(dens, 0, t, epsabs=1e-14)[0]
    assert laws.truncated_second_moment(law, t) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_truncated_second_moment_pareto_quadrature(alpha):
    # density of |X| is alpha x^-(alpha+1) on x > 1
    ref = integrate.quad(lambda x: alpha * x ** (1 - alpha), 1, 50.0)[0]
    assert laws.truncated_second_moment(laws.pareto_tail(alpha), 50.0) == pytest.approx(ref, rel=1e-9)
    assert laws.truncated_second_moment(laws.pareto_tail(alpha), 1.0) == 0.0


def test_truncated_second_moment_counterexample_exact():
    law = laws.counterexample_integer(1)
    exact = sum(Fraction(k * k) * (Fraction(1, k * k) - Fraction(1, (k + 1) ** 2)) for k in range(1, 10))
    assert laws.truncated_second_moment(law, 10) == pytest.approx(float(exact), rel=1e-14)
    assert laws.truncated_second_moment(law, 9.5) == pytest.approx(float(exact), rel=1e-14)
    assert laws.truncated_second_moment(law, 1.0) == 0.0


def test_rademacher_truncated_moment_and_band_mean():
    law = laws.rademacher()
    assert laws.truncated_second_moment(law, 1.0) == 0.0
    assert laws.truncated_second_moment(law, 1.0001) == 1.0
    assert laws.band_mean(law, 0.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        laws.band_mean(law, 2.0, 1.0)


def test_truncated_second_moment_examples():
    assert laws.truncated_second_moment(laws.rademacher(), 2.0) == 1.0
    assert laws.truncated_second_moment(laws.pareto_tail(2.0), math.e) == pytest.approx(2.0, rel=1e-15)
    direct = math.fsum(k * k * (k ** -2.0 - (k + 1) ** -2.0) for k in range(1, 4))
    assert laws.truncated_second_moment(laws.counterexample_integer(1), 3.5) == pytest.approx(direct)


def test_counterexample_tail_up_to_ten_and_first_moment():
    law = laws.counterexample_integer(1)
    x = np.abs(laws.from_uniforms(law, site_uniforms(8, 0, 10**6)))
    for k in range(6, 11):
        q = k ** -2.0
        assert abs(np.mean(x >= k) - q) <= 4 * math.sqrt(q * (1 - q) / x.size)
    # p-integrable with p = 1: E|X| = sum_k P(|X| >= k) = zeta(2)
    half = x[: x.size // 2].mean()
    assert abs(x.mean() - math.pi ** 2 / 6) < 0.05
    assert abs(x.mean() - half) < 0.05


def test_pareto_exceedance_at_ten():
    x = laws.from_uniforms(laws.pareto_tail(2.0), site_uniforms(12, 0, 10**5))
    f = np.mean(np.abs(x) > 10)
    assert abs(f - 0.01) <= 3 * math.sqrt(0.01 * 0.99 / x.size)
