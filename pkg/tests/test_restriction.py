from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holderconvex.analysis.restriction import (
    PointSample,
    check_convex_restriction,
    longest_concave_subset,
    longest_convex_subset,
    longest_monotone_subset,
)
from holderconvex.errors import CapExceeded, InvalidParams
from holderconvex.scalar import Scalar
import oracles


def _pts(xs, vs, err=0):
    return [PointSample(Fraction(x), Fraction(v), Fraction(err)) for x, v in zip(xs, vs)]


def _grid(m):
    return [Fraction(i, m) for i in range(m)]


def _is_convex_chain(points, idx):
    sub = [points[i] for i in idx]
    slopes = [(q.value - p.value) / (q.x - p.x) for p, q in zip(sub, sub[1:])]
    return all(s <= t for s, t in zip(slopes, slopes[1:]))


class TestConvexSubset:
    def test_parabola_keeps_everything(self):
        xs = _grid(60)
        assert list(longest_convex_subset(_pts(xs, [x * x for x in xs]))) == list(range(60))

    def test_strictly_concave_gives_two(self):
        xs = _grid(20)
        res = longest_convex_subset(_pts(xs, [-x * x for x in xs]))
        assert len(res) == 2

    def test_concave_wrapper(self):
        xs = _grid(20)
        assert len(longest_concave_subset(_pts(xs, [-x * x for x in xs]))) == 20

    def test_tiny_inputs(self):
        assert list(longest_convex_subset([])) == []
        assert list(longest_convex_subset(_pts([0], [1]))) == [0]

    def test_matches_brute_force(self):
        rng = random.Random(17)
        for _ in range(200):
            m = rng.randint(3, 12)
            xs = sorted(rng.sample(range(1000), m))
            vs = [rng.randint(-30, 30) for _ in range(m)]
            pts = _pts(xs, vs)
            res = longest_convex_subset(pts)
            assert len(res) == oracles.brute_longest_convex(xs, vs)
            assert _is_convex_chain(pts, list(res))

    def test_lexicographic_tie_break(self):
        # every pair is a convex chain of length 2 on a strictly concave shape
        xs = _grid(5)
        assert list(longest_convex_subset(_pts(xs, [-x * x for x in xs]))) == [0, 1]

    def test_cap(self):
        with pytest.raises(CapExceeded):
            longest_convex_subset(_pts(_grid(10), [0] * 10), cap=5)

    def test_abscissae_must_increase(self):
        with pytest.raises(InvalidParams):
            longest_convex_subset(_pts([0, 0], [1, 2]))

    def test_large_denominators_are_quantized(self):
        xs = _grid(10)
        # the common denominator of distinct prime powers passes 2048 bits
        vs = [Fraction(1, q ** 200) for q in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31)]
        res = longest_convex_subset(_pts(xs, vs))
        assert res.quantized

    @given(st.lists(st.integers(-100, 100), min_size=3, max_size=40))
    @settings(max_examples=60)
    def test_result_is_convex(self, vs):
        pts = _pts(range(len(vs)), vs)
        assert _is_convex_chain(pts, list(longest_convex_subset(pts)))


class TestMonotoneSubset:
    def test_increasing(self):
        assert longest_monotone_subset(_pts(range(8), range(8))).indices == list(range(8))

    def test_decreasing(self):
        res = longest_monotone_subset(_pts(range(8), range(8, 0, -1)))
        assert res.direction == "nonincreasing" and len(res.indices) == 8

    def test_matches_brute_force(self):
        rng = random.Random(23)
        for _ in range(200):
            m = rng.randint(1, 12)
            vs = [rng.randint(0, 6) for _ in range(m)]
            res = longest_monotone_subset(_pts(range(m), vs))
            assert len(res.indices) == oracles.brute_longest_monotone(vs)


class TestClassification:
    def test_two_points(self):
        v = check_convex_restriction(_pts([0, 1], [0, 5]))
        assert v.convex and v.concave

    def test_convex(self):
        v = check_convex_restriction(_pts([0, Fraction(1, 2), 1], [0, 0, 1]))
        assert v.classification == "Convex" and v.concave is False

    def test_concave_only(self):
        v = check_convex_restriction(_pts([0, Fraction(1, 2), 1], [0, 1, 0]))
        assert v.classification == "Concave" and v.convex is False
        assert v.convex_violation == (0, 1, 2)

    def test_undecidable_then_retry(self):
        pts = _pts([0, Fraction(1, 2), 1], [0, 0, 0], err=Fraction(1, 100))
        assert check_convex_restriction(pts).undecidable

        def sharpen(ps):
            return [PointSample(p.x, p.x * p.x, 0) for p in ps]

        assert check_convex_restriction(pts, sharpen).classification == "Convex"

    def test_scalar_values_carry_radius(self):
        p = PointSample(Fraction(1, 2), Scalar.guarded(Fraction(1, 4), Fraction(1, 1000)))
        assert p.err >= Fraction(1, 1000)
