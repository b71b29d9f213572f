from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest

from holderconvex.analysis.gapsum import gap_sum, radical_form, transitional_sum_bound
from holderconvex.cantor_base import gaps_at_depth, gaps_level0
from holderconvex.errors import InvalidParams
from holderconvex.scalar import Ordering
from holderconvex.tower import enumerate_transitional


class TestRadicalForm:
    def test_square(self):
        assert radical_form(Fraction(1, 4), 2) == (0, Fraction(1, 2))

    def test_power_of_two_remainder(self):
        # (1/8)^(1/2) = (1/4) * 2^(1/2)
        assert radical_form(Fraction(1, 8), 2) == (1, Fraction(1, 4))

    def test_irreducible(self):
        assert radical_form(Fraction(3), 2) is None

    def test_nonpositive(self):
        assert radical_form(Fraction(0), 2) is None


class TestGapSum:
    def test_empty(self):
        gs = gap_sum([], Fraction(1, 2))
        assert gs.partial_sum.exact_value == 0 and gs.components_counted == 0

    def test_three_quarter_gaps(self, small):
        gs = gap_sum(gaps_level0(small), Fraction(1, 2))
        assert gs.partial_sum.is_exact and gs.partial_sum.exact_value == Fraction(3, 2)

    def test_matches_float_sum(self, strict):
        gaps = list(gaps_at_depth(strict, 0)) + list(gaps_at_depth(strict, 1))[:500]
        gs = gap_sum(gaps, Fraction(1, 2))
        want = math.fsum(math.sqrt(float(g.length.exact_value)) for g in gaps)
        assert float(gs.partial_sum) == pytest.approx(want, rel=1e-12)
        assert gs.render_exact() is not None

    def test_cutoff_drops_short(self, small):
        gaps = list(gaps_at_depth(small, 0)) + list(gaps_at_depth(small, 1))
        gs = gap_sum(gaps, Fraction(1, 2), Fraction(1, 10))
        assert gs.components_counted == 3

    def test_non_unit_alpha_falls_back_to_intervals(self, small):
        gs = gap_sum(gaps_level0(small), Fraction(2, 3))
        assert gs.exact_terms is None
        lo, hi = gs.partial_sum.bounds()
        with mpmath.workdps(60):
            want = 3 * mpmath.mpf(1) / 4 ** (mpmath.mpf(2) / 3)
            assert mpmath.mpf(lo.numerator) / lo.denominator <= want <= mpmath.mpf(hi.numerator) / hi.denominator
        assert hi - lo < Fraction(1, 10 ** 60)

    def test_alpha_range(self):
        with pytest.raises(InvalidParams):
            gap_sum([], Fraction(3, 2))

    def test_compare_below(self, small):
        gs = gap_sum(gaps_level0(small), Fraction(1, 2))
        assert gs.compare_below(2) is Ordering.LESS
        assert gs.compare_below(1) is Ordering.GREATER


class TestTransitionalSums:
    @pytest.mark.parametrize("cutoff", [Fraction(1, 10 ** 12), Fraction(1, 10 ** 16)])
    def test_tier_sums_below_power(self, strict, cutoff):
        for n in (1, 2, 3):
            gs = gap_sum(enumerate_transitional(strict, n, cutoff), strict.alpha, cutoff)
            assert gs.compare_below(Fraction(1, strict.N ** n)) is Ordering.LESS

    def test_full_bound_below_one_over_N(self, strict):
        _, hi = transitional_sum_bound(strict).bounds()
        assert hi < Fraction(1, strict.N)

    def test_full_bound_covers_partial(self, strict):
        cutoff = Fraction(1, 10 ** 18)
        gs = gap_sum(enumerate_transitional(strict, 1, cutoff), strict.alpha, cutoff)
        assert gs.partial_sum.bounds()[1] <= transitional_sum_bound(strict).bounds()[0]
