from __future__ import annotations

import random
from fractions import Fraction

import pytest

from holderconvex.cantor_base import (
    ConstructionParams,
    child_depth_for_level,
    children_at_depth,
    gap_count_at_depth,
    gaps_at_depth,
    gaps_level0,
    phi0_eval,
)
from holderconvex.errors import DepthLimitExceeded, InvalidParams, OutOfDomain
from holderconvex.records import Kind, TerminalKind
from holderconvex.scalar import Mode
import oracles


def _pairs(recs):
    return [(r.a.exact_value, r.b.exact_value) for r in recs]


class TestParams:
    def test_strict_rejects_small_N(self):
        with pytest.raises(InvalidParams):
            ConstructionParams(N=4)

    def test_odd_N_rejected(self):
        with pytest.raises(InvalidParams):
            ConstructionParams.relaxed(5)

    def test_alpha_range(self):
        with pytest.raises(InvalidParams):
            ConstructionParams.relaxed(4, "3/2")

    def test_exact_mode_needs_unit_fraction(self):
        with pytest.raises(InvalidParams):
            ConstructionParams.relaxed(4, "2/3")
        ConstructionParams.relaxed(4, "2/3", mode=Mode.GUARDED)

    def test_float_alpha_rejected(self):
        with pytest.raises(InvalidParams):
            ConstructionParams.relaxed(4, 0.5)

    def test_relaxed_carries_warning(self, small, strict):
        assert small.warnings and not strict.warnings
        assert small.to_dict()["strict"] is False


class TestChildren:
    def test_depth_one(self, small):
        got = _pairs(children_at_depth(small, 1))
        assert got == [(0, Fraction(1, 16)), (Fraction(5, 16), Fraction(6, 16)),
                       (Fraction(10, 16), Fraction(11, 16)), (Fraction(15, 16), 1)]

    def test_depth_zero(self, strict):
        assert _pairs(children_at_depth(strict, 0)) == [(0, 1)]

    def test_depth_two(self, small):
        kids = children_at_depth(small, 2)
        assert len(kids) == 16
        assert _pairs(kids)[0] == (0, Fraction(1, 256))
        assert all(r.length.exact_value == Fraction(1, 256) for r in kids)

    def test_matches_oracle(self, small):
        assert _pairs(children_at_depth(small, 3)) == oracles.f0_children(4, 2, 3)

    def test_masses(self, small):
        kids = children_at_depth(small, 2)
        assert [r.base_value.exact_value for r in kids] == [Fraction(i, 16) for i in range(16)]

    def test_depth_limit(self, small):
        with pytest.raises(DepthLimitExceeded):
            children_at_depth(small, small.max_child_depth + 1)

    def test_child_depth_for_level(self, strict):
        assert [child_depth_for_level(strict, k) for k in range(1, 7)] == [1, 1, 2, 2, 3, 3]


class TestGaps:
    def test_level0(self, small):
        gaps = gaps_level0(small)
        assert _pairs(gaps) == [(Fraction(1, 16), Fraction(5, 16)), (Fraction(6, 16), Fraction(10, 16)),
                                (Fraction(11, 16), Fraction(15, 16))]
        assert [g.base_value.exact_value for g in gaps] == [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
        assert all(g.kind is Kind.GAP for g in gaps)

    def test_count(self, strict, small):
        assert len(gaps_level0(strict)) == 127
        assert len(list(gaps_at_depth(small, 2))) == gap_count_at_depth(4, 2) == 48

    def test_lengths_below_bound(self, small, strict):
        assert all(g.length.exact_value == Fraction(1, 4) for g in gaps_level0(small))
        for p in (small, strict):
            assert all(g.length.exact_value < Fraction(1, p.N - 1) for g in gaps_level0(p))

    def test_gaps_and_children_tile(self, small):
        pieces = sorted(_pairs(children_at_depth(small, 2)) + _pairs(gaps_at_depth(small, 0))
                        + _pairs(gaps_at_depth(small, 1)))
        assert pieces[0][0] == 0 and pieces[-1][1] == 1
        assert all(p[1] == q[0] for p, q in zip(pieces, pieces[1:]))

    def test_delta_power_identity(self, strict):
        for g in gaps_level0(strict)[:5]:
            ell = g.length.exact_value
            assert g.delta.exact_value == (ell / 128) ** 4


class TestPhi0:
    def test_endpoints(self, small, strict):
        for p in (small, strict):
            assert phi0_eval(p, 0).value.exact_value == 0
            assert phi0_eval(p, 1).value.exact_value == 1

    def test_middle_gap(self, small):
        r = phi0_eval(small, Fraction(1, 2))
        assert r.is_exact and r.mid == Fraction(1, 2)

    def test_self_similarity_example(self, small):
        assert phi0_eval(small, Fraction(1, 32)).mid == Fraction(1, 8)

    def test_default_eps_met(self, small):
        assert phi0_eval(small, Fraction(1, 3)).total_err <= Fraction(1, 10 ** 12)

    def test_out_of_domain(self, small):
        with pytest.raises(OutOfDomain):
            phi0_eval(small, Fraction(3, 2))

    def test_matches_oracle(self, small, strict):
        rng = random.Random(7)
        for p in (small, strict):
            for _ in range(300):
                x = Fraction(rng.getrandbits(48), 2 ** 48)
                want = oracles.phi0(p.N, 2, x)
                if want is not None:
                    assert phi0_eval(p, x).contains(want), x

    def test_nondecreasing(self, strict):
        rng = random.Random(3)
        xs = sorted(Fraction(rng.getrandbits(40), 2 ** 40) for _ in range(300))
        vals = [phi0_eval(strict, x, Fraction(1, 10 ** 20)) for x in xs]
        assert all(a.lower <= b.upper for a, b in zip(vals, vals[1:]))

    def test_guarded_agrees(self, small, small_guarded):
        rng = random.Random(11)
        for _ in range(100):
            x = Fraction(rng.getrandbits(32), 2 ** 32)
            e, g = phi0_eval(small, x), phi0_eval(small_guarded, x)
            assert g.lower <= e.upper and e.lower <= g.upper

    def test_truncated_error_meets_eps(self, small):
        x = Fraction(1, 3)
        eps = Fraction(1, 10 ** 30)
        r = phi0_eval(small, x, eps)
        assert r.total_err <= eps
        if not r.is_exact:
            assert r.address.terminal_kind is TerminalKind.TRUNCATED
