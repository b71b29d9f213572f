from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest

from holderconvex.analysis.holder import (
    AdversarialEndpoints,
    DyadicGrid,
    FixedPairs,
    UniformRandom,
    analytic_phi0_bound,
    holder_estimate,
    measure_c_phi0,
    measure_constants,
    root_upper,
)
from holderconvex.cantor_base import phi0_eval
from holderconvex.errors import InvalidParams
from holderconvex.tower import phi_n_eval

HALF = Fraction(1, 2)


def _phi0_bound_oracle(N: int) -> mpmath.mpf:
    """max over s of ((s + 1)/N) / (s*P - L)^(1/2), at 50 digits."""
    with mpmath.workdps(50):
        L = mpmath.mpf(1) / N ** 2
        P = (1 - L) / (N - 1)
        return max((mpmath.mpf(s + 1) / N) / mpmath.sqrt(s * P - L) for s in range(1, N))


class TestRootUpper:
    @pytest.mark.parametrize("r", [Fraction(1, 3), Fraction(2), Fraction(7, 1000), Fraction(1, 10 ** 20)])
    def test_is_tight_upper_bound(self, r):
        for a in (HALF, Fraction(2, 3), Fraction(1, 5)):
            up = root_upper(r, a)
            # compare q-th powers exactly: up^q >= r^p, and a slightly smaller value fails
            q, p = a.denominator, a.numerator
            assert up ** q >= r ** p
            assert (up * (1 - Fraction(1, 2 ** 50))) ** q < r ** p

    def test_exact_root(self):
        assert root_upper(Fraction(1, 16), HALF) == Fraction(1, 4)


class TestEstimate:
    def test_constant_function(self):
        est = holder_estimate(lambda x: Fraction(3), HALF, 200, UniformRandom(1))
        assert est.lower_bound == 0 and est.pairs_tested == 200

    def test_phi0_example_pair(self, small):
        est = holder_estimate(lambda x: phi0_eval(small, x), HALF, 1,
                              FixedPairs(((Fraction(0), Fraction(1, 16)),)))
        assert est.lower_bound == 1 and est.witness == (0, Fraction(1, 16))

    def test_identity_alpha_one(self):
        est = holder_estimate(lambda x: x, Fraction(1), 500, DyadicGrid())
        assert est.lower_bound == 1

    def test_sqrt_reaches_one(self):
        est = holder_estimate(lambda x: x, HALF, 10, FixedPairs(((Fraction(0), Fraction(1)),)))
        assert est.lower_bound == 1

    def test_alpha_range(self):
        with pytest.raises(InvalidParams):
            holder_estimate(lambda x: x, Fraction(3, 2), 1)

    def test_tower_levels_stay_below_bound(self, strict):
        c = analytic_phi0_bound(strict)
        for n in (1, 2):
            est = holder_estimate(lambda x, n=n: phi_n_eval(strict, x, n), strict.alpha, 500,
                                  AdversarialEndpoints(strict, 0, depth=1))
            assert est.lower_bound <= c * (2 - Fraction(1, 2 ** n))


class TestSamplers:
    def test_uniform_deterministic(self):
        a = list(UniformRandom(5).pairs(50))
        assert a == list(UniformRandom(5).pairs(50)) and a != list(UniformRandom(6).pairs(50))
        assert all(0 <= x < y <= 1 for x, y in a)

    def test_dyadic_neighbours(self):
        for x, y in DyadicGrid(level=6).pairs(60):
            assert y - x == Fraction(1, y.denominator if x == 0 else max(x.denominator, y.denominator))

    def test_adversarial_in_range(self, strict):
        pairs = list(AdversarialEndpoints(strict, 3, depth=1).pairs(400))
        assert len(pairs) == 400 and all(0 <= x < y <= 1 for x, y in pairs)


class TestConstants:
    @pytest.mark.parametrize("key,N", [("small", 4), ("strict", 128)])
    def test_analytic_bound_matches_oracle(self, key, N, request):
        p = request.getfixturevalue(key)
        got = analytic_phi0_bound(p)
        want = _phi0_bound_oracle(N)
        assert float(got) == pytest.approx(float(want), rel=1e-15)
        with mpmath.workdps(50):
            assert mpmath.mpf(got.numerator) / got.denominator >= want

    def test_strict_value(self, strict):
        assert float(analytic_phi0_bound(strict)) == pytest.approx(1.000061, abs=1e-6)

    def test_bracket(self, strict):
        b = measure_c_phi0(strict, 2000, seed=0)
        assert 1 <= b.lower <= b.upper

    def test_measure_constants(self, strict):
        mc = measure_constants(strict, n_pairs=1000, k_max=4)
        assert mc.c_phi0.lower <= mc.c_phi0.upper
        assert mc.c_f0_boxcount.lower <= mc.c_f0_boxcount.upper
        assert mc.notes
