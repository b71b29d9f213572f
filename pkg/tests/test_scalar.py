from __future__ import annotations

import operator
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holderconvex.errors import IrrationalInExactMode, NegativeBase, Undecidable
from holderconvex.scalar import (
    Mode,
    Ordering,
    Scalar,
    compare,
    format_scalar,
    format_value,
    parse_scalar,
    pow_rational,
)
from oracles import sqrt_digits

fractions_st = st.fractions(max_denominator=10 ** 12).filter(lambda q: abs(q) < 10 ** 9)


class TestPowRational:
    def test_perfect_square_stays_exact(self):
        r = pow_rational(Fraction(1, 16), 1, 2)
        assert r.is_exact and r.exact_value == Fraction(1, 4)

    def test_integer_power(self):
        assert pow_rational(Fraction(1, 4), 4, 1).exact_value == Fraction(1, 256)

    def test_sqrt2_against_digit_oracle(self):
        r = pow_rational(2, 1, 2)
        assert r.mode is Mode.GUARDED
        lo, hi = r.bounds()
        olo, ohi = sqrt_digits(2, 70)
        assert lo <= ohi and olo <= hi
        assert hi - lo < Fraction(1, 10 ** 70)

    def test_require_exact_raises_on_irrational(self):
        with pytest.raises(IrrationalInExactMode):
            pow_rational(2, 1, 2, require_exact=True)

    def test_negative_base(self):
        with pytest.raises(NegativeBase):
            pow_rational(-1, 1, 2)

    @given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6), st.integers(1, 5))
    def test_root_of_power_is_exact(self, n, d, q):
        base = Fraction(n, d) ** q
        assert pow_rational(base, 1, q).exact_value == Fraction(n, d)


class TestCompare:
    def test_equal_fractions(self):
        assert compare(Fraction(1, 3), Fraction(2, 6)) is Ordering.EQUAL

    def test_less(self):
        assert compare(Fraction(1, 4), Fraction(1, 3)) is Ordering.LESS

    def test_overlap_is_undecidable(self):
        assert compare(parse_scalar("0.5 ± 0.1"), parse_scalar("0.55 ± 0.1")) is Ordering.UNDECIDABLE

    def test_operator_raises_when_undecidable(self):
        with pytest.raises(Undecidable):
            _ = parse_scalar("0.5±0.1") < parse_scalar("0.55±0.1")

    def test_disjoint_guarded(self):
        assert parse_scalar("1±0.1") < parse_scalar("2±0.1")


class TestTextualForm:
    @given(fractions_st)
    def test_exact_round_trip(self, q):
        s = Scalar.exact(q)
        assert parse_scalar(format_scalar(s)) == s

    @given(fractions_st, st.fractions(min_value=Fraction(1, 10 ** 30), max_value=1))
    @settings(max_examples=200)
    def test_guarded_round_trip_encloses(self, q, err):
        s = Scalar.guarded(q, err)
        lo, hi = s.bounds()
        back = parse_scalar(format_scalar(s))
        blo, bhi = back.bounds()
        assert blo <= lo and hi <= bhi

    @given(fractions_st, st.fractions(min_value=Fraction(1, 10 ** 40), max_value=1))
    def test_format_value_encloses(self, q, err):
        back = parse_scalar(format_value(q, err))
        blo, bhi = back.bounds()
        assert blo <= q - err and q + err <= bhi

    def test_exact_form_is_p_over_q(self):
        assert format_scalar(Scalar.exact(Fraction(3, 8))) == "3/8"
        assert format_scalar(Scalar.exact(-2)) == "-2"


_OPS = [operator.add, operator.sub, operator.mul, operator.truediv]


def _random_tree(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return Fraction(rng.randint(-50, 50), rng.randint(1, 50))
    return (rng.choice(_OPS), _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))


def _evaluate(tree, leaf):
    if isinstance(tree, Fraction):
        return leaf(tree)
    op, a, b = tree
    return op(_evaluate(a, leaf), _evaluate(b, leaf))


class TestRandomExpressions:
    def test_guarded_encloses_exact(self):
        rng = random.Random(2024)
        checked = 0
        for _ in range(10_000):
            tree = _random_tree(rng, 4)
            try:
                exact = _evaluate(tree, lambda q: q)
            except ZeroDivisionError:
                continue
            guarded = _evaluate(tree, lambda q: Scalar(q, prec=128))
            lo, hi = guarded.bounds()
            assert lo <= exact <= hi, tree
            via_scalar = _evaluate(tree, Scalar.exact)
            assert via_scalar.is_exact and via_scalar.exact_value == exact
            checked += 1
        assert checked > 9000
