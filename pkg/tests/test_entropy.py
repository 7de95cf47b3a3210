import math

import numpy as np
import pytest

from setsum.entropy import (EntropyProfile, counterexample_entropy_bound, counterexample_series,
                            empirical_profile, entropy_integral, exact_cover, greedy_cover,
                            quadrant_bracketing_profile)
from setsum.regions import Quadrant, class_enumerate, counterexample_params, rho_matrix


def _brute_cover(regions, eps):
    # smallest k for which some k centres cover everything
    import itertools
    cover = rho_matrix(regions) < eps
    for k in range(1, len(regions) + 1):
        for combo in itertools.combinations(range(len(regions)), k):
            if cover[list(combo)].any(axis=0).all():
                return k


def test_trivial_covers():
    grid = class_enumerate("quadrant_grid", 8)
    assert greedy_cover(grid, 1.01) == 1 == exact_cover(grid, 1.01)
    # radius below the smallest distance: every set needs its own ball
    assert greedy_cover(grid, 0.3) == 9 == exact_cover(grid, 0.3)
    assert greedy_cover([], 0.5) == 0


@pytest.mark.parametrize("m,eps", [(8, 0.5), (8, 0.6), (10, 0.45), (9, 0.7)])
def test_exact_cover_matches_brute_force(m, eps):
    grid = class_enumerate("quadrant_grid", m)
    assert exact_cover(grid, eps) == _brute_cover(grid, eps)


def test_greedy_within_one_of_exact_on_quadrant_grid():
    grid = class_enumerate("quadrant_grid", 64)
    for eps, expected in ((0.5, 3), (0.25, 10), (0.125, 65)):
        assert exact_cover(grid, eps) == expected
        assert greedy_cover(grid, eps) - exact_cover(grid, eps) <= 1


def test_greedy_log_factor_bound_2d():
    grid = class_enumerate("quadrant_grid", 5, d=2)
    for eps in (0.3, 0.5, 0.7):
        g, x = greedy_cover(grid, eps), exact_cover(grid, eps)
        assert x <= g <= x * (1 + math.log(len(grid)))


def test_bracketing_bound_dominates_empirical():
    grid = class_enumerate("quadrant_grid", 128)
    eps = np.array([0.5, 0.25, 0.125])
    emp = empirical_profile(grid, eps)
    ana = quadrant_bracketing_profile(1, eps)
    assert np.all(emp.logN <= ana.logN)


def test_profile_validation_and_envelope():
    with pytest.raises(ValueError):
        EntropyProfile(np.array([0.1, 0.5]), np.array([1.0, 0.0]), "greedy_empirical")
    with pytest.raises(ValueError):
        EntropyProfile(np.array([0.5]), np.array([1.0]), "guess")
    p = EntropyProfile(np.array([0.5, 0.25, 0.1]), np.array([1.0, 0.5, 2.0]), "greedy_empirical")
    assert p.logN.tolist() == [1.0, 1.0, 2.0]
    assert p.to_csv().splitlines()[0] == "eps,logN,source"


def test_entropy_integral():
    flat = EntropyProfile(np.array([1.0, 0.5, 0.25]), np.array([4.0, 4.0, 4.0]), "analytic_bound")
    res = entropy_integral(flat)
    assert res.value == pytest.approx(2.0) and res.lower == 0.0
    rising = EntropyProfile(np.array([1.0, 0.5]), np.array([1.0, 4.0]), "analytic_bound")
    res = entropy_integral(rising)
    assert res.value == pytest.approx(0.5 * (1 + 2) / 2) and res.lower == 0.5


def test_entropy_bound_domination():
    for r in range(1, 31):
        params = counterexample_params(1, 1, r)
        exact, simple = counterexample_entropy_bound(params)
        # math.log accepts arbitrarily large integers, so this is an exact-argument reference
        direct = math.log(1 + 2 * r * params.n ** (params.d * params.k))
        assert exact == pytest.approx(direct, rel=1e-12)
        assert simple >= exact


def test_series_converges():
    s = counterexample_series(1, 1, 30)
    assert s.r[0] == 2 and s.r[-1] == 30
    assert np.all(np.diff(s.partial_sums) > 0)
    assert s.terms[s.r >= 20].max() < 1e-3
    assert np.all(s.terms <= s.majorant * (1 + 1e-12))
    # first term by hand: eps_1 sqrt(3 k_2 ln 16) with eps_1 = 1/2, k_2 = 1
    assert s.terms[0] == pytest.approx(0.5 * math.sqrt(3 * math.log(16)))
    with pytest.raises(ValueError):
        counterexample_series(1, 1, 1)


def test_cover_counts_nonincreasing_in_eps():
    grid = class_enumerate("quadrant_grid", 32)
    counts = [greedy_cover(grid, e) for e in (0.1, 0.2, 0.3, 0.5, 0.8, 1.2)]
    assert counts == sorted(counts, reverse=True)
    assert greedy_cover(grid[:1], 0.01) == 1
    assert greedy_cover([Quadrant((0.5,)), Quadrant((0.51,))], 0.2) == 1


def test_quadrant_grid_cover_in_bracket():
    grid = class_enumerate("quadrant_grid", 128)
    for eps in (0.5, 0.25, 0.125):
        target = math.ceil(1 / (2 * eps * eps))
        assert target - 1 <= greedy_cover(grid, eps) <= 2 * target


def test_entropy_bound_examples():
    s = counterexample_entropy_bound(counterexample_params(1, 1, 3))[1]
    assert s == pytest.approx(3 * math.log(64)) and round(s, 3) == 12.477
    s = counterexample_entropy_bound(counterexample_params(1, 2, 1))[1]
    assert round(s, 3) == 8.318
    # a different r may be queried against the same (p, d)
    assert counterexample_entropy_bound(counterexample_params(1, 1, 3), r=5) == \
        counterexample_entropy_bound(counterexample_params(1, 1, 5))


def test_entropy_integral_constant_profiles():
    zero = EntropyProfile(np.array([1.0, 0.5]), np.zeros(2), "analytic_bound")
    assert entropy_integral(zero).value == 0.0
    c = EntropyProfile(np.array([1.0, 0.6, 0.2, 0.05]), np.full(4, 2.0), "analytic_bound")
    assert entropy_integral(c).value == pytest.approx(math.sqrt(2.0))
